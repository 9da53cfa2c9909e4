import hashlib
import json
from enum import IntEnum
from typing import Any, Optional

from pydantic import ConfigDict, Field, model_validator

from veilface.evaluation.types import EvaluationConfig
from veilface.generator.types import GeneratorConfig
from veilface.meta_attack.types import MetaStepConfig
from veilface.noise_pool.types import NoisePoolConfig
from veilface.perturbation.types import DEFAULT_SIGMA1, FusionConfig
from veilface.utils.math import effective_sigma
from veilface.utils.model import VeilBaseModel

CHECKPOINT_FORMAT_VERSION = 1
DEFAULT_LR = 2e-5


class TrainingStage(IntEnum):
    """Curriculum stages, trained in order."""

    GENERATION = 1  # G_enc / G_dec / D learn attribute editing
    ATTACK = 2  # E_adv and R trained jointly, G frozen
    ERASION = 3  # R alone


class LossWeights(VeilBaseModel):
    """Weights of the six training loss terms."""

    att: float = Field(default=10.0, ge=0)
    rec: float = Field(default=150.0, ge=0)
    g: float = Field(default=1.0, ge=0)
    adv: float = Field(default=200.0, ge=0)
    era: float = Field(default=150.0, ge=0)
    perb: float = Field(default=1.0, ge=0)


class StageEpochs(VeilBaseModel):
    stage1: int = Field(default=200, gt=0)
    stage2: int = Field(default=100, gt=0)
    stage3: int = Field(default=50, gt=0)


class StageConfig(VeilBaseModel):
    """
    Everything one curriculum stage needs, derived from the experiment config.

    Attributes:
        stage (TrainingStage): Stage number.

        epochs (int): Epochs to train, > 0.

        lr (float): Adam learning rate, > 0.

        lambdas (LossWeights): Loss weights, all >= 0.

        beta (float): Feature fusion weight.

        gamma (float): Clean-domain injection weight.

        sigma1 (float): Perturbation floor at the training resolution.

        epsilon (float): Adversarial loss floor.

        inner_lr (float): Meta-train step size.

        noise_pool_prob (float): Per-sample noise probability.
    """

    model_config = ConfigDict(frozen=True)

    stage: TrainingStage
    epochs: int = Field(gt=0)
    lr: float = Field(gt=0)
    lambdas: LossWeights
    beta: float
    gamma: float
    sigma1: float
    epsilon: float
    inner_lr: float
    noise_pool_prob: float


class ExperimentConfig(VeilBaseModel):
    """
    One experiment: architecture, curriculum, attack, noise and evaluation
    settings. Loaded from the flat `key.path = value` format by `load_config`.

    Attributes:
        seed (int): Base seed every random stream is derived from.

        device (str): Torch device.

        image_size (int): Training resolution.

        n_attributes (int): Attribute vector width.

        attribute_names (list[str]): Names of the attribute bits, in order.

        batch_size (int): Batch size.

        lr (float): Learning rate of every stage.

        adam_betas (list[float]): Adam moment coefficients.

        target_image (str, optional): Path of the impersonation target face.

        ensemble_manifest (str, optional): Surrogate manifest path.

        dataset_index (str, optional): Dataset index path.

        checkpoint_dir (str): Where checkpoints and the training log go.

        stages (StageEpochs): Epochs per stage.

        lambdas (LossWeights): Loss weights.

        beta (float): Feature fusion weight.

        gamma (float): Clean-domain injection weight.

        sigma1 (float): Perturbation floor at 3x256x256, rescaled to `image_size`.

        epsilon (float): Adversarial loss floor.

        inner_lr (float): Meta-train step size.

        second_order (bool): Differentiate through the inner step.

        meta_auxiliary (bool): False trains with the plain-ensemble loss.

        noise_pool (NoisePoolConfig): Training corruption pool.

        generator (GeneratorConfig): Generator architecture.

        evaluation (EvaluationConfig): Evaluation settings.
    """

    seed: int = 0
    device: str = "cpu"
    image_size: int = 32
    n_attributes: int = 13
    attribute_names: list[str] = Field(default_factory=list)
    batch_size: int = Field(default=8, gt=0)
    lr: float = Field(default=DEFAULT_LR, gt=0)
    adam_betas: list[float] = Field(default_factory=lambda: [0.9, 0.999])
    target_image: Optional[str] = None
    ensemble_manifest: Optional[str] = None
    dataset_index: Optional[str] = None
    checkpoint_dir: str = "checkpoints"
    stages: StageEpochs = Field(default_factory=StageEpochs)
    lambdas: LossWeights = Field(default_factory=LossWeights)
    beta: float = Field(default=0.5, ge=0, le=1)
    gamma: float = Field(default=0.3, ge=0, le=1)
    sigma1: float = Field(default=DEFAULT_SIGMA1, gt=0)
    epsilon: float = Field(default=0.0, ge=0)
    inner_lr: float = Field(default=DEFAULT_LR, gt=0)
    second_order: bool = True
    meta_auxiliary: bool = True
    noise_pool: NoisePoolConfig = Field(default_factory=NoisePoolConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    @model_validator(mode="before")
    @classmethod
    def sync_generator(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        generator = dict(data.get("generator") or {})
        generator.setdefault("image_size", data.get("image_size", 32))
        generator.setdefault("n_attributes", data.get("n_attributes", 13))
        data = dict(data)
        data["generator"] = generator
        return data

    @model_validator(mode="after")
    def check_consistency(self):
        if len(self.adam_betas) != 2 or not all(0 <= b < 1 for b in self.adam_betas):
            raise ValueError("adam_betas must be two values in [0, 1)")
        if self.generator.image_size != self.image_size:
            raise ValueError("generator.image_size disagrees with image_size")
        if self.generator.n_attributes != self.n_attributes:
            raise ValueError("generator.n_attributes disagrees with n_attributes")
        if self.attribute_names and len(self.attribute_names) != self.n_attributes:
            raise ValueError("attribute_names must have n_attributes entries")
        return self

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return (3, self.image_size, self.image_size)

    @property
    def effective_sigma1(self) -> float:
        return effective_sigma(self.sigma1, self.image_shape)

    @property
    def fusion(self) -> FusionConfig:
        return FusionConfig(
            beta=self.beta, gamma=self.gamma, sigma1=self.effective_sigma1
        )

    @property
    def meta_step(self) -> MetaStepConfig:
        return MetaStepConfig(
            inner_lr=self.inner_lr,
            epsilon=self.epsilon,
            second_order=self.second_order,
            meta_auxiliary=self.meta_auxiliary,
        )

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()

    def stage_config(self, stage: TrainingStage) -> StageConfig:
        epochs = getattr(self.stages, f"stage{int(stage)}")
        return StageConfig(
            stage=stage,
            epochs=epochs,
            lr=self.lr,
            lambdas=self.lambdas,
            beta=self.beta,
            gamma=self.gamma,
            sigma1=self.effective_sigma1,
            epsilon=self.epsilon,
            inner_lr=self.inner_lr,
            noise_pool_prob=(
                self.noise_pool.prob if stage > TrainingStage.GENERATION else 0.0
            ),
        )


class EpochRecord(VeilBaseModel):
    """
    One line of the training log.

    Attributes:
        stage (int): Curriculum stage.

        epoch (int): One-based epoch within the stage.

        losses (dict[str, float]): Epoch means of the weighted loss terms
            (att, rec, g, adv, era, perb as applicable) plus `d` and `total`.

        primary_losses (list[float]): Per-surrogate mean primary loss (stage 2).

        weights (list[float]): Surrogate weights used in the epoch (stage 2).

        batches (int): Batches trained.
    """

    stage: int
    epoch: int
    losses: dict[str, float]
    primary_losses: list[float] = Field(default_factory=list)
    weights: list[float] = Field(default_factory=list)
    batches: int = 0


class CheckpointManifest(VeilBaseModel):
    """
    Everything needed to resume or use a trained pipeline.

    Attributes:
        format_version (int): Checkpoint layout version.

        stage (int): Stage the checkpoint belongs to.

        epoch (int): Epochs of `stage` completed.

        completed (bool): Whether `stage` finished.

        config_hash (str): Hash of the experiment config.

        config (dict): The experiment config itself.

        components (dict): state_dict per network (generator, discriminator,
            perturb_encoder, restorer).

        optimizers (dict): state_dict per optimizer.

        history (dict, optional): Surrogate loss history.

        rng_state (dict): Torch RNG state.
    """

    format_version: int = CHECKPOINT_FORMAT_VERSION
    stage: int
    epoch: int
    completed: bool
    config_hash: str
    config: dict[str, Any] = Field(default_factory=dict)
    components: dict[str, Any] = Field(default_factory=dict)
    optimizers: dict[str, Any] = Field(default_factory=dict)
    history: Optional[dict[str, Any]] = None
    rng_state: dict[str, Any] = Field(default_factory=dict)
