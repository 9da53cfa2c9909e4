import hashlib
import io
import logging
import os
from pathlib import Path
from typing import Optional, Union

import torch

from veilface.trainer.types import CHECKPOINT_FORMAT_VERSION, CheckpointManifest
from veilface.utils.exceptions import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    OverwriteRefusedError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CONTAINER_KEYS = {"format_version", "sha256", "payload"}


def stage_checkpoint_path(directory: PathLike, stage: int) -> Path:
    return Path(directory) / f"stage{stage}.pt"


def epoch_checkpoint_path(directory: PathLike, stage: int, epoch: int) -> Path:
    return Path(directory) / f"stage{stage}_epoch{epoch}.pt"


def latest_epoch_checkpoint(directory: PathLike, stage: int) -> Optional[Path]:
    """Highest-epoch `stage{k}_epoch{e}.pt` in `directory`, if any."""
    directory = Path(directory)
    if not directory.is_dir():
        return None
    best, best_epoch = None, -1
    prefix = f"stage{stage}_epoch"
    for path in directory.glob(f"{prefix}*.pt"):
        suffix = path.stem[len(prefix) :]
        if suffix.isdigit() and int(suffix) > best_epoch:
            best, best_epoch = path, int(suffix)
    return best


def save_checkpoint(
    path: PathLike, manifest: CheckpointManifest, overwrite: bool = True
) -> Path:
    """
    Writes a checkpoint: the serialized manifest plus its sha256, so a
    truncated or corrupted file is detected before anything is loaded.

    Args:
        path (str | Path): Destination file.

        manifest (CheckpointManifest): What to save.

        overwrite (bool): Whether an existing file may be replaced.

    Returns:
        Path: The written file.

    Raises:
        OverwriteRefusedError: If the file exists and `overwrite` is False.
    """
    path = Path(path)
    if path.exists() and not overwrite:
        raise OverwriteRefusedError(f"{path} exists, pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.BytesIO()
    torch.save(manifest.model_dump(), buffer)
    payload = buffer.getvalue()
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(
        {
            "format_version": manifest.format_version,
            "sha256": hashlib.sha256(payload).hexdigest(),
            "payload": payload,
        },
        tmp,
    )
    os.replace(tmp, path)
    logger.info(f"saved stage {manifest.stage} epoch {manifest.epoch} to {path}")
    return path


def load_checkpoint(path: PathLike) -> CheckpointManifest:
    """
    Reads and verifies a checkpoint. Nothing is applied to any network here.

    Args:
        path (str | Path): Checkpoint file.

    Returns:
        CheckpointManifest: The verified manifest.

    Raises:
        CheckpointIntegrityError: If the file cannot be read or fails its hash.
        CheckpointVersionError: If it was written by another format version.
    """
    path = Path(path)
    try:
        container = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointIntegrityError(f"{path} could not be read: {e}") from e
    if not isinstance(container, dict) or not CONTAINER_KEYS <= set(container):
        raise CheckpointIntegrityError(f"{path} is not a checkpoint")
    if container["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path} has format version {container['format_version']}, "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    payload = container["payload"]
    if hashlib.sha256(payload).hexdigest() != container["sha256"]:
        raise CheckpointIntegrityError(f"{path} failed its integrity check")
    try:
        data = torch.load(io.BytesIO(payload), map_location="cpu", weights_only=False)
        return CheckpointManifest.model_validate(data)
    except Exception as e:
        raise CheckpointIntegrityError(f"{path} payload is invalid: {e}") from e
