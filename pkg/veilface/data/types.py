from typing import Optional

from pydantic import Field, model_validator

from veilface.utils.enum import StrEnum
from veilface.utils.model import VeilBaseModel

DEFAULT_SPLIT_FRACTIONS = (0.8, 0.1, 0.1)


class Split(StrEnum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class IndexEntry(VeilBaseModel):
    """
    One face image of the dataset index.

    Attributes:
        file (str): Path relative to the index root.

        identity (str): Identity name.

        attributes (list[int]): Binary attribute vector.

        split (Split): Split assignment.
    """

    file: str
    identity: str
    attributes: list[int]
    split: Split


class DatasetIndex(VeilBaseModel):
    """
    Ingested dataset: image files with identities, attributes and splits.

    Attributes:
        root (str): Image directory the entries are relative to.

        attribute_names (list[str]): Names of the attribute bits.

        seed (int): Seed of the split assignment.

        entries (list[IndexEntry]): Images, in filename order.
    """

    root: str
    attribute_names: list[str]
    seed: int = 0
    entries: list[IndexEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_widths(self):
        width = len(self.attribute_names)
        for entry in self.entries:
            if len(entry.attributes) != width:
                raise ValueError(
                    f"{entry.file} has {len(entry.attributes)} attributes, "
                    f"expected {width}"
                )
            if any(v not in (0, 1) for v in entry.attributes):
                raise ValueError(f"{entry.file} has non-binary attributes")
        return self

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    def split(self, split: Optional[Split] = None) -> list[IndexEntry]:
        if split is None:
            return list(self.entries)
        return [e for e in self.entries if e.split == split]

    def identities(self) -> list[str]:
        return sorted({e.identity for e in self.entries})
