import logging
from typing import Callable, Optional, Sequence, Union

import torch

from veilface.evaluation.baselines import fgsm_baseline, pgd_baseline
from veilface.evaluation.metrics import asr, esr, quality_metrics
from veilface.evaluation.types import (
    AblationPoint,
    EvaluationConfig,
    MetricsReport,
    RateCell,
)
from veilface.noise_pool.ops import apply, parse_noise_op
from veilface.noise_pool.types import NoiseOp
from veilface.perturbation.fusion import SemanticProtector
from veilface.perturbation.types import FusionConfig
from veilface.surrogate.model import SurrogateModel
from veilface.utils.exceptions import EmptySetError
from veilface.utils.seed import derive_seed

logger = logging.getLogger(__name__)

RestoreFn = Callable[[torch.Tensor], torch.Tensor]
Transform = Union[NoiseOp, str]


def _as_op(transform: Transform) -> NoiseOp:
    return transform if isinstance(transform, NoiseOp) else parse_noise_op(transform)


@torch.no_grad()
def _restore(restore_fn: RestoreFn, x: torch.Tensor, batch_size: int = 64):
    return torch.cat(
        [restore_fn(x[i : i + batch_size]) for i in range(0, x.shape[0], batch_size)]
    )


def rate_cells(
    models: Sequence[SurrogateModel],
    protected: torch.Tensor,
    x_target: torch.Tensor,
    restored: Optional[torch.Tensor] = None,
) -> dict[str, RateCell]:
    """ASR (and ESR when restored images are given) per model."""
    return {
        m.id: RateCell(
            asr=asr(m, protected, x_target),
            esr=esr(m, restored, x_target) if restored is not None else None,
        )
        for m in models
    }


def robustness_sweep(
    protected: torch.Tensor,
    restore_fn: Optional[RestoreFn],
    transforms: Sequence[Transform],
    models: Sequence[SurrogateModel],
    x_target: torch.Tensor,
    seed: int = 0,
) -> MetricsReport:
    """
    ASR on T(x_adv) and ESR on R(T(x_adv)) for every transform T and model.

    Args:
        protected (torch.Tensor): Protected faces x_adv.

        restore_fn (Callable, optional): The restorer; ESR is skipped without it.

        transforms (Sequence): NoiseOps or `kind[:value]` strings.

        models (Sequence[SurrogateModel]): Calibrated evaluation models.

        x_target (torch.Tensor): Target face.

        seed (int): Seed of the random transforms.

    Returns:
        MetricsReport: `rates` holds the untransformed row, `robustness` one row
        per transform keyed by the op name.

    Raises:
        UnknownNoiseOpError: If a transform cannot be parsed.
        EmptySetError: If there are no protected images.
    """
    if protected.shape[0] == 0:
        raise EmptySetError("No protected images to evaluate")
    ops = [_as_op(t) for t in transforms]
    restored = _restore(restore_fn, protected) if restore_fn is not None else None
    report = MetricsReport(
        n=protected.shape[0], rates=rate_cells(models, protected, x_target, restored)
    )
    for op in ops:
        noisy = apply(op, protected, derive_seed(seed, "sweep", op.name))
        noisy_restored = _restore(restore_fn, noisy) if restore_fn is not None else None
        report.robustness[op.name] = rate_cells(models, noisy, x_target, noisy_restored)
        logger.info(f"robustness {op.name}: {report.robustness[op.name]}")
    return report


@torch.no_grad()
def ablation_sweep(
    protector: SemanticProtector,
    restore_fn: Optional[RestoreFn],
    x_cov: torch.Tensor,
    att_b: torch.Tensor,
    x_target: torch.Tensor,
    models: Sequence[SurrogateModel],
    parameter: str,
    values: Sequence[float],
) -> list[AblationPoint]:
    """
    Regenerates protected (and restored) faces at each value of one fusion
    weight, keeping the trained networks fixed.

    Args:
        protector (SemanticProtector): Trained generator and E_adv.

        restore_fn (Callable, optional): Restorer.

        x_cov (torch.Tensor): Clean faces.

        att_b (torch.Tensor): Target attributes.

        x_target (torch.Tensor): Target face.

        models (Sequence[SurrogateModel]): Calibrated evaluation models.

        parameter (str): "beta" or "gamma".

        values (Sequence[float]): Values to sweep, each in [0, 1].

    Returns:
        list[AblationPoint]: One point per value.
    """
    if parameter not in ("beta", "gamma"):
        raise ValueError(f"Can only sweep beta or gamma, got `{parameter}`")
    base = protector.cfg
    points = []
    try:
        for value in values:
            protector.cfg = FusionConfig(**{**base.model_dump(), parameter: value})
            x_adv = protector.protect(x_cov, att_b)
            x_rec = _restore(restore_fn, x_adv) if restore_fn is not None else None
            points.append(
                AblationPoint(
                    parameter=parameter,
                    value=value,
                    rates=rate_cells(models, x_adv, x_target, x_rec),
                    protected_quality=quality_metrics(x_adv, x_cov),
                    restored_quality=(
                        quality_metrics(x_rec, x_cov) if x_rec is not None else None
                    ),
                )
            )
    finally:
        protector.cfg = base
    return points


def evaluate_protection(
    models: Sequence[SurrogateModel],
    x_cov: torch.Tensor,
    x_adv: torch.Tensor,
    x_target: torch.Tensor,
    config: Optional[EvaluationConfig] = None,
    restore_fn: Optional[RestoreFn] = None,
    attack_models: Optional[Sequence[SurrogateModel]] = None,
    seed: int = 0,
) -> MetricsReport:
    """
    Full evaluation: rates, quality of protected and restored faces, the
    robustness sweep and, when `attack_models` are given, FGSM/PGD baselines
    crafted on them.

    Args:
        models (Sequence[SurrogateModel]): Calibrated evaluation models.

        x_cov (torch.Tensor): Clean faces.

        x_adv (torch.Tensor): Protected faces, paired with `x_cov`.

        x_target (torch.Tensor): Target face.

        config (EvaluationConfig, optional): Budgets and transforms.

        restore_fn (Callable, optional): Restorer.

        attack_models (Sequence[SurrogateModel], optional): White-box models
            the baselines attack.

        seed (int): Seed of the random transforms.

    Returns:
        MetricsReport: The report.

    Raises:
        EmptySetError: If there are no images.
    """
    config = config or EvaluationConfig()
    if x_adv.dim() == 3:
        x_cov, x_adv = x_cov.unsqueeze(0), x_adv.unsqueeze(0)
    if x_adv.shape[0] == 0:
        raise EmptySetError("No images to evaluate")
    report = robustness_sweep(
        x_adv, restore_fn, config.transforms, models, x_target, seed
    )
    report.protected_quality = quality_metrics(x_adv, x_cov)
    if restore_fn is not None:
        report.restored_quality = quality_metrics(_restore(restore_fn, x_adv), x_cov)
    if attack_models:
        fgsm = fgsm_baseline(attack_models, x_cov, x_target, config.fgsm_eps_signed)
        pgd = pgd_baseline(
            attack_models,
            x_cov,
            x_target,
            config.pgd_eps_signed,
            config.pgd_steps,
            config.pgd_step_size_signed,
        )
        report.baselines = {
            "fgsm": rate_cells(models, fgsm, x_target),
            "pgd": rate_cells(models, pgd, x_target),
        }
    return report
