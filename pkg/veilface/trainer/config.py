import json
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from veilface.trainer.types import ExperimentConfig

SEED_ENV = "SEED"
PATH_KEYS = ("target_image", "ensemble_manifest", "dataset_index", "checkpoint_dir")


def parse_value(raw: str) -> Any:
    """JSON when the value parses as JSON, the raw text otherwise."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_config_text(text: str) -> dict:
    """
    Parses the flat config grammar into a nested dict.

    One `key.path = value` per line; blank lines and `#` comments are skipped.

    Args:
        text (str): Config file content.

    Returns:
        dict: Nested settings.

    Raises:
        ValueError: On a malformed line or a key assigned twice.
    """
    data: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(line).strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        key = key.strip()
        if not sep or not key or any(not part for part in key.split(".")):
            raise ValueError(
                f"line {lineno}: expected `key.path = value`, got {line!r}"
            )
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"line {lineno}: `{key}` conflicts with a value")
        if parts[-1] in node:
            raise ValueError(f"line {lineno}: `{key}` is set twice")
        node[parts[-1]] = parse_value(raw.strip())
    return data


def _strip_comment(line: str) -> str:
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def config_from_dict(
    data: Mapping, env: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """
    Validates settings into an ExperimentConfig, applying the SEED override.

    Args:
        data (Mapping): Nested settings.

        env (Mapping, optional): Environment; defaults to `os.environ`.

    Returns:
        ExperimentConfig: The validated config.
    """
    env = os.environ if env is None else env
    data = dict(data)
    if env.get(SEED_ENV):
        data["seed"] = int(env[SEED_ENV])
    return ExperimentConfig.model_validate(data)


def load_config(
    path: Union[str, Path], env: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """
    Loads an experiment config file. Relative paths inside it are resolved
    against the file's directory.

    Args:
        path (str | Path): Config file.

        env (Mapping, optional): Environment for the SEED override.

    Returns:
        ExperimentConfig: The validated config.
    """
    path = Path(path)
    data = parse_config_text(path.read_text())
    for key in PATH_KEYS:
        if isinstance(data.get(key), str) and not Path(data[key]).is_absolute():
            data[key] = str(path.parent / data[key])
    return config_from_dict(data, env)


def dump_config(config: ExperimentConfig) -> str:
    """Writes a config back in the flat grammar, one sorted key per line."""
    lines = []

    def walk(prefix: str, value: Any) -> None:
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        else:
            lines.append(f"{prefix} = {json.dumps(value)}")

    walk("", config.model_dump(mode="json", exclude_none=True))
    return "\n".join(lines) + "\n"
