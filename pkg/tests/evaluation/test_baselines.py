import pytest
import torch

from veilface.evaluation.baselines import fgsm_baseline, pgd_baseline, target_loss

TOLERANCE = 1e-6


def test_pgd_stays_in_budget(models, x_cov, x_target):
    eps, steps = 8 / 255, 5
    seen = []

    def check(step, x_adv):
        seen.append(step)
        assert (x_adv - x_cov).abs().max() <= eps + TOLERANCE
        assert x_adv.min() >= -1.0 and x_adv.max() <= 1.0
        assert not x_adv.requires_grad

    out = pgd_baseline(models, x_cov, x_target, eps, steps, eps / 4, on_step=check)
    assert seen == list(range(steps))
    assert out.shape == x_cov.shape


def test_pgd_moves_toward_target(models, x_cov, x_target):
    eps = 16 / 255
    clean = target_loss(models, x_cov, x_target).item()
    pgd = pgd_baseline(models, x_cov, x_target, eps, 10, eps / 4)
    assert target_loss(models, pgd, x_target).item() < clean


def test_fgsm_is_one_full_step(models, x_cov, x_target):
    eps = 4 / 255
    steps = []
    out = fgsm_baseline(
        models, x_cov, x_target, eps, on_step=lambda s, x: steps.append(s)
    )
    assert steps == [0]
    assert (out - x_cov).abs().max() <= eps + TOLERANCE
    assert torch.equal(
        out, pgd_baseline(models, x_cov, x_target, eps, 1, eps)
    )


def test_zero_budget_is_identity(models, x_cov, x_target):
    out = pgd_baseline(models, x_cov, x_target, 0.0, 3, 0.01)
    assert torch.equal(out, x_cov.clamp(-1, 1))


def test_argument_errors(models, x_cov, x_target):
    with pytest.raises(ValueError):
        pgd_baseline(models, x_cov, x_target, -0.1, 3, 0.01)
    with pytest.raises(ValueError):
        pgd_baseline(models, x_cov, x_target, 0.1, 0, 0.01)
