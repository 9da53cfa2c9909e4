from pathlib import Path
from typing import Union

import torch

from veilface.surrogate.embedder import ToyEmbedder
from veilface.surrogate.model import SurrogateEnsemble, SurrogateModel
from veilface.surrogate.types import (
    SurrogateManifest,
    SurrogateManifestEntry,
    SurrogateRole,
)
from veilface.utils.exceptions import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    MissingComponentError,
)

EMBEDDER_FORMAT_VERSION = 1


def load_manifest(path: Union[str, Path]) -> SurrogateManifest:
    """
    Load the ensemble manifest file.

    Args:
        path (str | Path): Path to the JSON manifest.

    Returns:
        SurrogateManifest: The validated manifest.
    """
    return SurrogateManifest.model_validate_json(Path(path).read_text())


def save_manifest(manifest: SurrogateManifest, path: Union[str, Path]) -> None:
    Path(path).write_text(manifest.model_dump_json(indent=2))


def save_embedder(model: SurrogateModel, path: Union[str, Path]) -> None:
    torch.save(
        {
            "format_version": EMBEDDER_FORMAT_VERSION,
            "state_dict": model.network.state_dict(),
        },
        path,
    )


def load_embedder(
    entry: SurrogateManifestEntry, root: Union[str, Path]
) -> SurrogateModel:
    """
    Rebuilds a toy embedder from a manifest entry and its checkpoint.

    Args:
        entry (SurrogateManifestEntry): The manifest entry.

        root (str | Path): Directory the entry's checkpoint path is relative to.

    Returns:
        SurrogateModel: The model, with thresholds taken from the manifest.

    Raises:
        MissingComponentError: If the checkpoint file does not exist.
        CheckpointIntegrityError: If the file cannot be read.
        CheckpointVersionError: If the format version is unsupported.
    """
    path = Path(root) / entry.checkpoint
    if not path.exists():
        raise MissingComponentError(f"Embedder checkpoint `{path}` not found")
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointIntegrityError(f"Failed to read `{path}`: {e}")
    if blob.get("format_version") != EMBEDDER_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"`{path}` has format version {blob.get('format_version')}, "
            f"expected {EMBEDDER_FORMAT_VERSION}"
        )
    network = ToyEmbedder(entry.embedder)
    network.load_state_dict(blob["state_dict"])
    return SurrogateModel(
        id=entry.id,
        network=network,
        image_size=entry.embedder.image_size,
        role=entry.role,
        tau_attack=entry.tau_attack,
        tau_erasion=entry.tau_erasion,
    )


def load_models(
    manifest: SurrogateManifest, root: Union[str, Path]
) -> list[SurrogateModel]:
    return [load_embedder(entry, root) for entry in manifest.models]


def build_ensemble(models: list[SurrogateModel]) -> SurrogateEnsemble:
    """Collects the white-box surrogates, frozen, in manifest order."""
    white_box = [
        m.freeze() for m in models if m.role == SurrogateRole.WHITE_BOX_TRAIN
    ]
    return SurrogateEnsemble(white_box)
