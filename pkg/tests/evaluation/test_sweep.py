import pytest
import torch

from veilface.evaluation.sweep import (
    ablation_sweep,
    evaluate_protection,
    robustness_sweep,
)
from veilface.evaluation.types import EvaluationConfig
from veilface.noise_pool.ops import evaluation_transforms
from veilface.utils.exceptions import EmptySetError, UnknownNoiseOpError


def test_robustness_sweep(models, x_cov, x_target):
    report = robustness_sweep(
        x_cov, lambda x: x, evaluation_transforms(), models, x_target, seed=1
    )
    assert report.n == 4
    assert set(report.rates) == {m.id for m in models}
    assert list(report.robustness) == [op.name for op in evaluation_transforms()]
    assert report.robustness["identity"] == report.rates
    again = robustness_sweep(
        x_cov, lambda x: x, evaluation_transforms(), models, x_target, seed=1
    )
    assert report.max_abs_difference(again) == 0.0


def test_robustness_sweep_errors(models, x_cov, x_target):
    with pytest.raises(UnknownNoiseOpError):
        robustness_sweep(x_cov, None, ["blur"], models, x_target)
    with pytest.raises(EmptySetError):
        robustness_sweep(x_cov[:0], None, ["identity"], models, x_target)
    report = robustness_sweep(x_cov, None, ["jpeg:50"], models, x_target)
    assert all(cell.esr is None for cell in report.rates.values())


def test_ablation_sweep_restores_weights(protector, models, x_cov, att_b, x_target):
    points = ablation_sweep(
        protector, None, x_cov, att_b, x_target, models, "gamma", [0.0, 1.0]
    )
    assert [p.value for p in points] == [0.0, 1.0]
    assert protector.cfg.gamma == 0.3
    assert points[0].restored_quality is None
    with pytest.raises(ValueError):
        ablation_sweep(protector, None, x_cov, att_b, x_target, models, "lr", [0.1])


def test_evaluate_protection(protector, models, ensemble, x_cov, att_b, x_target):
    with torch.no_grad():
        x_adv = protector.protect(x_cov, att_b)
    config = EvaluationConfig(pgd_steps=2, transforms=["identity", "resize:0.5"])
    report = evaluate_protection(
        models,
        x_cov,
        x_adv,
        x_target,
        config=config,
        restore_fn=lambda x: x,
        attack_models=list(ensemble),
    )
    assert report.restored_quality == report.protected_quality
    assert set(report.baselines) == {"fgsm", "pgd"}
    assert set(report.robustness) == {"identity", "resize:0.5"}
    plain = evaluate_protection(models, x_cov, x_adv, x_target, config=config)
    assert plain.baselines == {} and plain.restored_quality is None
    with pytest.raises(EmptySetError):
        evaluate_protection(models, x_cov[:0], x_adv[:0], x_target, config=config)
