import math
from typing import Optional

from pydantic import Field, field_validator, model_validator

from veilface.utils.enum import StrEnum
from veilface.utils.model import VeilBaseModel

# Both history slots start at 1 so the first epoch sees uniform rates.
LOSS_HISTORY_BOOTSTRAP = 1.0

# Lowest storable threshold; accepts a similarity of exactly -1 under strict `>`.
TAU_FLOOR = math.nextafter(-1.0, -math.inf)


class SurrogateRole(StrEnum):
    """
    Role of a face-embedding model within an experiment.

    Attributes:
        WHITE_BOX_TRAIN: Differentiated through during training.

        BLACK_BOX_EVAL: Only queried at evaluation time.
    """

    WHITE_BOX_TRAIN = "white_box_train"
    BLACK_BOX_EVAL = "black_box_eval"


class EmbedderConfig(VeilBaseModel):
    """
    Architecture of the toy convolutional embedder.

    Attributes:
        image_size (int): Square input size.

        channels (list[int]): Output channels of each stride-2 conv layer.

        embedding_dim (int): Dimension d of the embedding.

        activation (str): One of "lrelu", "elu", "tanh".
    """

    image_size: int = 32
    channels: list[int] = Field(default_factory=lambda: [16, 32, 64])
    embedding_dim: int = 64
    activation: str = "lrelu"

    @field_validator("channels")
    @classmethod
    def check_channels(cls, v: list[int]) -> list[int]:
        if not v or any(c <= 0 for c in v):
            raise ValueError("channels must be a non-empty list of positive ints")
        return v


class SurrogateManifestEntry(VeilBaseModel):
    """
    One face-embedding model as recorded in the ensemble manifest file.

    Attributes:
        id (str): Unique model identifier.

        role (SurrogateRole): White-box training surrogate or black-box evaluator.

        embedding_dim (int): Embedding dimension d.

        tau_attack (float, optional): Threshold at the attack FAR target.

        tau_erasion (float, optional): Threshold at the erasion FAR target.

        checkpoint (str): Path to the embedder checkpoint, relative to the manifest.

        embedder (EmbedderConfig): Toy architecture used to rebuild the network.

        seed (int): Initialization seed used when training a toy embedder.
    """

    id: str
    role: SurrogateRole
    embedding_dim: int
    tau_attack: Optional[float] = None
    tau_erasion: Optional[float] = None
    checkpoint: str
    embedder: EmbedderConfig = Field(default_factory=EmbedderConfig)
    seed: int = 0

    @field_validator("tau_attack", "tau_erasion")
    @classmethod
    def check_tau(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not TAU_FLOOR <= v <= 1.0:
            raise ValueError(f"thresholds must lie in [-1, 1], got {v}")
        return v

    @model_validator(mode="after")
    def check_dim(self):
        if self.embedding_dim != self.embedder.embedding_dim:
            raise ValueError("embedding_dim disagrees with embedder.embedding_dim")
        return self


class SurrogateManifest(VeilBaseModel):
    models: list[SurrogateManifestEntry]

    def by_role(self, role: SurrogateRole) -> list[SurrogateManifestEntry]:
        return [m for m in self.models if m.role == role]


class CalibrationResult(VeilBaseModel):
    """
    Outcome of calibrating one threshold.

    Attributes:
        far_target (float): Requested false acceptance rate.

        tau (float): Calibrated threshold.

        far (float): Achieved impostor acceptance rate at tau.

        tar (float, optional): Genuine acceptance rate at tau, when genuine
            pairs were given.
    """

    far_target: float
    tau: float
    far: float
    tar: Optional[float] = None


class LossHistory(VeilBaseModel):
    """
    Per-model epoch-mean losses for the last two finished epochs, plus running
    accumulators for the epoch in progress.

    Attributes:
        previous (list[float]): Mean loss of each model in epoch t-1.

        before_previous (list[float]): Mean loss of each model in epoch t-2.

        running_sum (list[float]): Sum of losses recorded in the current epoch.

        running_count (list[int]): Number of losses recorded in the current epoch.
    """

    previous: list[float]
    before_previous: list[float]
    running_sum: list[float]
    running_count: list[int]

    @classmethod
    def bootstrap(cls, k: int) -> "LossHistory":
        return cls(
            previous=[LOSS_HISTORY_BOOTSTRAP] * k,
            before_previous=[LOSS_HISTORY_BOOTSTRAP] * k,
            running_sum=[0.0] * k,
            running_count=[0] * k,
        )

    @property
    def size(self) -> int:
        return len(self.previous)

    def record(self, index: int, loss: float) -> None:
        self.running_sum[index] += float(loss)
        self.running_count[index] += 1

    def end_epoch(self) -> None:
        """
        Shifts the window: t-1 becomes t-2 and the running means become t-1.
        Models with no recorded loss keep their previous mean.
        """
        means = [
            s / c if c > 0 else prev
            for s, c, prev in zip(self.running_sum, self.running_count, self.previous)
        ]
        self.before_previous = list(self.previous)
        self.previous = means
        self.running_sum = [0.0] * self.size
        self.running_count = [0] * self.size
