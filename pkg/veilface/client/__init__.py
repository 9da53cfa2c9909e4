import logging
from pathlib import Path
from typing import Optional, Union

from veilface.client.apis import (
    EvaluationAPI,
    ProtectionAPI,
    SurrogateAPI,
    TrainingAPI,
)
from veilface.client.context import *
from veilface.trainer.config import load_config
from veilface.trainer.types import ExperimentConfig


class VeilClient:
    """
    The primary interface to veilface.

    Use `create_veil_client` to build one.

    Attributes:
        - context (VeilClientContext): Config, face models, target and trained networks.
        - surrogates (SurrogateAPI): Threshold calibration.
        - training (TrainingAPI): The three-stage curriculum.
        - protection (ProtectionAPI): Protecting and restoring faces.
        - evaluation (EvaluationAPI): ASR / ESR, quality, robustness and baselines.
    """

    context: VeilClientContext
    surrogates: SurrogateAPI
    training: TrainingAPI
    protection: ProtectionAPI
    evaluation: EvaluationAPI

    def __init__(self, context: VeilClientContext):
        self.context = context
        self.surrogates = SurrogateAPI(context)
        self.training = TrainingAPI(context)
        self.protection = ProtectionAPI(context)
        self.evaluation = EvaluationAPI(context)


def create_veil_client(
    config: Union[ExperimentConfig, str, Path],
    context_opts: Optional[VeilClientContextOpts] = None,
) -> VeilClient:
    """
    Create a VeilClient from an experiment config or a config file.

    Args:
        config (ExperimentConfig | str | Path): The experiment or its config file.

        context_opts (VeilClientContextOpts, optional): What to load eagerly.

    Returns:
        VeilClient: The client.
    """
    if not isinstance(config, ExperimentConfig):
        logging.info(f"Loading experiment config from {config}")
        config = load_config(config)
    return VeilClient(create_veil_client_context(config, context_opts))


__all__ = [
    "VeilClient",
    "create_veil_client",
    "VeilClientContext",
    "VeilClientContextOpts",
    "ProtectionPipeline",
    "create_veil_client_context",
]
