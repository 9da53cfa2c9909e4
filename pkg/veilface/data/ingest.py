import csv
import logging
from pathlib import Path
from typing import Optional, Union

from PIL import Image, UnidentifiedImageError

from veilface.data.types import (
    DEFAULT_SPLIT_FRACTIONS,
    DatasetIndex,
    IndexEntry,
    Split,
)
from veilface.utils.exceptions import DatasetError, OverwriteRefusedError
from veilface.utils.seed import derive_seed

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def identity_of(filename: str) -> str:
    """
    Identity of an image file: its first directory component, or for flat
    directories the stem prefix before the first underscore.
    """
    parts = Path(filename).parts
    if len(parts) > 1:
        return parts[0]
    return Path(filename).stem.split("_", 1)[0]


def assign_split(
    filename: str,
    seed: int,
    fractions: tuple[float, float, float] = DEFAULT_SPLIT_FRACTIONS,
) -> Split:
    """Deterministic split from a seeded hash of the filename."""
    u = derive_seed(seed, "split", filename) / float(2**63)
    if u < fractions[0]:
        return Split.TRAIN
    if u < fractions[0] + fractions[1]:
        return Split.VAL
    return Split.TEST


def _check_image(path: Path) -> Optional[str]:
    if not path.is_file():
        return "file not found"
    try:
        with Image.open(path) as img:
            img.verify()
    except (UnidentifiedImageError, OSError) as e:
        return f"cannot decode image ({e})"
    return None


def ingest_dataset(
    image_dir: PathLike,
    attributes_csv: PathLike,
    out_index: Optional[PathLike] = None,
    seed: int = 0,
    fractions: tuple[float, float, float] = DEFAULT_SPLIT_FRACTIONS,
    overwrite: bool = False,
) -> DatasetIndex:
    """
    Builds a dataset index from an image directory and an attribute CSV.

    The CSV header is `filename` followed by the attribute names; every value
    must be 0 or 1. All rows are checked before failing, so the error lists
    every bad row.

    Args:
        image_dir (str | Path): Directory the filenames are relative to.

        attributes_csv (str | Path): Attribute table.

        out_index (str | Path, optional): Where to write the index JSON.

        seed (int): Split assignment seed.

        fractions (tuple): Train / val / test shares.

        overwrite (bool): Allow replacing an existing index file.

    Returns:
        DatasetIndex: The index.

    Raises:
        DatasetError: With one diagnostic per bad row.
        OverwriteRefusedError: If `out_index` exists and `overwrite` is False.
    """
    image_dir = Path(image_dir)
    if out_index is not None and Path(out_index).exists() and not overwrite:
        raise OverwriteRefusedError(f"{out_index} exists, pass --force to overwrite")
    if abs(sum(fractions) - 1.0) > 1e-9 or any(f < 0 for f in fractions):
        raise ValueError(f"Split fractions must be >= 0 and sum to 1, got {fractions}")

    with open(attributes_csv, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0].strip() != "filename" or len(rows[0]) < 2:
        raise DatasetError(
            "Attribute CSV must start with `filename` followed by attribute names"
        )
    names = [name.strip() for name in rows[0][1:]]

    errors, entries = [], []
    for row_number, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(names) + 1:
            errors.append(
                f"row {row_number}: expected {len(names) + 1} columns, got {len(row)}"
            )
            continue
        filename = row[0].strip()
        values = [cell.strip() for cell in row[1:]]
        bad = [v for v in values if v not in ("0", "1")]
        if bad:
            errors.append(f"row {row_number}: non-binary attribute value {bad[0]!r}")
            continue
        problem = _check_image(image_dir / filename)
        if problem is not None:
            errors.append(f"row {row_number}: {filename}: {problem}")
            continue
        entries.append(
            IndexEntry(
                file=filename,
                identity=identity_of(filename),
                attributes=[int(v) for v in values],
                split=assign_split(filename, seed, fractions),
            )
        )
    if errors:
        raise DatasetError(f"{attributes_csv} has {len(errors)} invalid rows", errors)
    if not entries:
        raise DatasetError(f"{attributes_csv} lists no images")

    entries.sort(key=lambda e: e.file)
    index = DatasetIndex(
        root=str(image_dir), attribute_names=names, seed=seed, entries=entries
    )
    logger.info(
        f"ingested {len(entries)} images of {len(index.identities())} identities"
    )
    if out_index is not None:
        save_index(index, out_index)
    return index


def save_index(index: DatasetIndex, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(index.model_dump_json(indent=2))
    return path


def load_index(path: PathLike) -> DatasetIndex:
    """
    Loads an index; a relative root is resolved against the index file.

    Raises:
        DatasetError: If the file is not a valid index.
    """
    path = Path(path)
    try:
        index = DatasetIndex.model_validate_json(path.read_text())
    except (OSError, ValueError) as e:
        raise DatasetError(f"{path} is not a valid dataset index: {e}") from e
    if not Path(index.root).is_absolute():
        index.root = str(path.parent / index.root)
    return index
