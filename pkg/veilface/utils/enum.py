from enum import Enum


class StrEnum(str, Enum):
    """String enum whose `str()` is its value, so it dumps cleanly into
    config files, manifests and report JSON."""

    def __str__(self):
        return self.value
