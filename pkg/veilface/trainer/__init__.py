from veilface.trainer.checkpoint import *
from veilface.trainer.config import *
from veilface.trainer.trainer import *
from veilface.trainer.types import *

__all__ = [
    "CHECKPOINT_FORMAT_VERSION",
    "DEFAULT_LR",
    "TrainingStage",
    "LossWeights",
    "StageEpochs",
    "StageConfig",
    "ExperimentConfig",
    "EpochRecord",
    "CheckpointManifest",
    "SEED_ENV",
    "parse_config_text",
    "config_from_dict",
    "load_config",
    "dump_config",
    "stage_checkpoint_path",
    "epoch_checkpoint_path",
    "latest_epoch_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "TRAIN_LOG",
    "check_finite",
    "set_trainable",
    "CurriculumTrainer",
]
