from veilface.noise_pool.ops import *
from veilface.noise_pool.pool import *
from veilface.noise_pool.types import *

__all__ = [
    "DEFAULT_JPEG_QUALITY",
    "DEFAULT_GAUSSIAN_VAR",
    "DEFAULT_TRAIN_RESIZE",
    "DEFAULT_EVAL_RESIZE",
    "DEFAULT_MEDIAN_KERNEL",
    "DEFAULT_MAX_ANGLE",
    "DEFAULT_CROP_FRACTION",
    "DEFAULT_NOISE_PROB",
    "DIFFERENTIABLE_KINDS",
    "NoiseKind",
    "NoiseOp",
    "NoisePoolConfig",
    "NoisePool",
    "apply",
    "sample_training_op",
    "gradient_probe",
    "parse_noise_op",
    "evaluation_transforms",
]
