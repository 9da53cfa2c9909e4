import math
from typing import Optional

from pydantic import ConfigDict, Field, field_validator

from veilface.utils.math import unit_eps_to_signed
from veilface.utils.model import VeilBaseModel

# 4/255 in [0, 1] pixel units.
DEFAULT_BASELINE_EPS = 4.0 / 255.0
DEFAULT_PGD_STEPS = 40
MIN_IMPOSTOR_PAIRS = 100


class EvaluationConfig(VeilBaseModel):
    """
    Evaluation settings. Perturbation budgets are given in [0, 1] pixel units
    and doubled for the internal [-1, 1] range.

    Attributes:
        far_attack (float): FAR target of the attack threshold tau_1.

        far_erasion (float): FAR target of the erasion threshold tau_2.

        min_impostor_pairs (int): Calibration refuses with fewer impostor pairs.

        fgsm_eps (float): FGSM L-inf budget.

        pgd_eps (float): PGD L-inf budget.

        pgd_steps (int): PGD iterations.

        pgd_step_size (float, optional): PGD step; defaults to pgd_eps / 4.

        transforms (list[str]): Robustness-sweep transforms in `kind[:value]` form.
    """

    far_attack: float = Field(default=0.01, gt=0, lt=1)
    far_erasion: float = Field(default=0.1, gt=0, lt=1)
    min_impostor_pairs: int = Field(default=MIN_IMPOSTOR_PAIRS, ge=1)
    fgsm_eps: float = Field(default=DEFAULT_BASELINE_EPS, ge=0, le=1)
    pgd_eps: float = Field(default=DEFAULT_BASELINE_EPS, ge=0, le=1)
    pgd_steps: int = Field(default=DEFAULT_PGD_STEPS, ge=1)
    pgd_step_size: Optional[float] = Field(default=None, gt=0)
    transforms: list[str] = Field(
        default_factory=lambda: [
            "identity",
            "jpeg:50",
            "gaussian:0.003",
            "resize:0.5",
            "median_filter:5",
            "rotate:30",
            "center_crop:0.875",
        ]
    )

    @property
    def fgsm_eps_signed(self) -> float:
        return unit_eps_to_signed(self.fgsm_eps)

    @property
    def pgd_eps_signed(self) -> float:
        return unit_eps_to_signed(self.pgd_eps)

    @property
    def pgd_step_size_signed(self) -> float:
        step = self.pgd_step_size
        if step is None:
            step = self.pgd_eps / 4
        return unit_eps_to_signed(step)


class QualityMetrics(VeilBaseModel):
    """
    Pixel distances between two image sets in [-1, 1].

    Attributes:
        l1 (float): Mean absolute error.

        mse (float): Mean squared error.

        psnr (float): Peak signal-to-noise ratio with data range 2; +inf for
            identical images.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants")

    l1: float
    mse: float
    psnr: float


class RateCell(VeilBaseModel):
    """ASR and ESR of one model under one transform."""

    asr: float = Field(ge=0, le=1)
    esr: Optional[float] = Field(default=None, ge=0, le=1)


class AblationPoint(VeilBaseModel):
    """Rates and quality at one value of a swept fusion weight."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    parameter: str
    value: float
    rates: dict[str, RateCell]
    protected_quality: QualityMetrics
    restored_quality: Optional[QualityMetrics] = None


class MetricsReport(VeilBaseModel):
    """
    Evaluation results.

    Attributes:
        n (int): Number of evaluated images.

        rates (dict[str, RateCell]): Per-model ASR / ESR on untransformed images.

        protected_quality (QualityMetrics, optional): x_adv vs x_cov.

        restored_quality (QualityMetrics, optional): x_rec vs x_cov.

        robustness (dict[str, dict[str, RateCell]]): transform -> model -> rates.

        baselines (dict[str, dict[str, RateCell]]): baseline name -> model -> ASR.

        ablation (list[AblationPoint]): Optional fusion-weight sweep.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants")

    n: int = Field(gt=0)
    rates: dict[str, RateCell] = Field(default_factory=dict)
    protected_quality: Optional[QualityMetrics] = None
    restored_quality: Optional[QualityMetrics] = None
    robustness: dict[str, dict[str, RateCell]] = Field(default_factory=dict)
    baselines: dict[str, dict[str, RateCell]] = Field(default_factory=dict)
    ablation: list[AblationPoint] = Field(default_factory=list)

    @field_validator("robustness", "baselines")
    @classmethod
    def check_nested(cls, v: dict) -> dict:
        for row in v.values():
            if not row:
                raise ValueError("report rows must not be empty")
        return v

    def max_abs_difference(self, other: "MetricsReport") -> float:
        """Largest absolute difference over every numeric field of two reports."""
        return _max_abs_difference(self.model_dump(), other.model_dump())


def _max_abs_difference(a, b) -> float:
    if isinstance(a, dict) and isinstance(b, dict):
        if a.keys() != b.keys():
            return math.inf
        return max((_max_abs_difference(a[k], b[k]) for k in a), default=0.0)
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return math.inf
        return max((_max_abs_difference(x, y) for x, y in zip(a, b)), default=0.0)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if a == b:
            return 0.0
        return abs(a - b)
    return 0.0 if a == b else math.inf
