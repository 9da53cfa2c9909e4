import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch
from pydantic import BaseModel

from veilface.data.image_io import load_image
from veilface.generator.networks import Encoder, Generator
from veilface.noise_pool.pool import NoisePool
from veilface.perturbation.fusion import SemanticProtector
from veilface.restorer.restorer import Restorer
from veilface.surrogate.loader import load_manifest, load_models
from veilface.surrogate.model import SurrogateModel
from veilface.surrogate.types import SurrogateManifest
from veilface.trainer.types import ExperimentConfig


@dataclass
class ProtectionPipeline:
    """Trained networks needed to protect and restore faces."""

    generator: Generator
    perturb_encoder: Encoder
    restorer: Optional[Restorer]
    protector: SemanticProtector
    stage: int


@dataclass
class VeilClientContext:
    """
    Context required to use the veilface client.
    """

    config: ExperimentConfig
    device: torch.device
    noise_pool: NoisePool
    manifest: Optional[SurrogateManifest] = None
    manifest_path: Optional[Path] = None
    models: list[SurrogateModel] = field(default_factory=list)
    x_target: Optional[torch.Tensor] = None
    pipeline: Optional[ProtectionPipeline] = None


class VeilClientContextOpts(BaseModel):
    load_models: bool = True
    load_target: bool = True


def create_veil_client_context(
    config: ExperimentConfig, opts: Optional[VeilClientContextOpts] = None
) -> VeilClientContext:
    """
    Initializes a VeilClientContext from an experiment config.

    Args:
        config (ExperimentConfig): The experiment.

        opts (VeilClientContextOpts, optional): What to load eagerly.

    Returns:
        VeilClientContext: The context.

    Note:
        The surrogate manifest and target image are loaded when the config names
        them; missing files are reported when an operation needs them.
    """
    opts = opts or VeilClientContextOpts()
    context = VeilClientContext(
        config=config,
        device=torch.device(config.device),
        noise_pool=NoisePool(config.noise_pool),
    )
    if opts.load_models and config.ensemble_manifest:
        path = Path(config.ensemble_manifest)
        if path.exists():
            context.manifest_path = path
            context.manifest = load_manifest(path)
            context.models = load_models(context.manifest, path.parent)
            logging.info(f"loaded {len(context.models)} face models from {path}")
        else:
            logging.warning(f"ensemble manifest {path} does not exist yet")
    if opts.load_target and config.target_image:
        path = Path(config.target_image)
        if path.exists():
            context.x_target = load_image(path, config.image_size).unsqueeze(0)
        else:
            logging.warning(f"target image {path} does not exist")
    return context
