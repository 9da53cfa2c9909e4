from veilface.meta_attack.attack import *
from veilface.meta_attack.types import *

__all__ = [
    "RATE_GUARD",
    "TaskSplit",
    "AdaptiveWeights",
    "MetaStepConfig",
    "MetaBatchResult",
    "task_splits",
    "primary_loss",
    "inner_update",
    "inner_step",
    "weighted_auxiliary",
    "auxiliary_loss",
    "adaptive_weights",
    "adversarial_loss",
    "ensemble_adversarial_loss",
    "meta_adversarial_loss",
    "run_meta_batch",
]
