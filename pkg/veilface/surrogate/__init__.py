from veilface.surrogate.calibrate import *
from veilface.surrogate.embedder import *
from veilface.surrogate.loader import *
from veilface.surrogate.model import *
from veilface.surrogate.train import *
from veilface.surrogate.types import *

__all__ = [
    "SurrogateRole",
    "EmbedderConfig",
    "SurrogateManifestEntry",
    "SurrogateManifest",
    "CalibrationResult",
    "LossHistory",
    "ToyEmbedder",
    "SurrogateModel",
    "SurrogateEnsemble",
    "embed",
    "cosine_similarity",
    "FAR_ATTACK",
    "FAR_ERASION",
    "acceptance_rate",
    "threshold_at_far",
    "make_verification_pairs",
    "pair_similarities",
    "calibrate_threshold",
    "CosineMarginHead",
    "train_toy_embedder",
    "load_manifest",
    "save_manifest",
    "save_embedder",
    "load_embedder",
    "load_models",
    "build_ensemble",
]
