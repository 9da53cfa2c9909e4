from veilface.utils.enum import *
from veilface.utils.exceptions import *
from veilface.utils.math import *
from veilface.utils.model import *
from veilface.utils.seed import *
from veilface.utils.tensor import *

__all__ = [
    "StrEnum",
    "VeilBaseModel",
    "VeilException",
    "InputShapeError",
    "DimensionMismatchError",
    "EmptySetError",
    "InvalidAttributeError",
    "NumericalGuardError",
    "NonFiniteLossError",
    "MissingComponentError",
    "InsufficientDataError",
    "UnknownNoiseOpError",
    "NotDifferentiableError",
    "CheckpointVersionError",
    "CheckpointIntegrityError",
    "ConfigMismatchError",
    "StageDependencyError",
    "DatasetError",
    "OverwriteRefusedError",
    "REFERENCE_IMAGE_SHAPE",
    "to_signed_range",
    "from_signed_range",
    "unit_eps_to_signed",
    "effective_sigma",
    "derive_seed",
    "make_generator",
    "seed_everything",
    "ensure_image_batch",
    "ensure_same_shape",
    "ensure_attributes",
]
