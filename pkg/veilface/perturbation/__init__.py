from veilface.perturbation.fusion import *
from veilface.perturbation.losses import *
from veilface.perturbation.types import *

__all__ = [
    "DEFAULT_SIGMA1",
    "FusionConfig",
    "init_perturbation_encoder",
    "encoder_params",
    "fuse_features",
    "perturbation_features",
    "generate_protected",
    "attribute_edit",
    "SemanticProtector",
    "perturbation_loss",
]
