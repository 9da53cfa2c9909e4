import math

import pytest
import torch

from veilface.evaluation.metrics import (
    asr,
    attack_success_rate,
    erasion_success_rate,
    esr,
    quality_metrics,
    target_similarities,
)
from veilface.surrogate.model import SurrogateModel
from veilface.utils.exceptions import (
    EmptySetError,
    InputShapeError,
    MissingComponentError,
)


def test_rates_match_brute_force_count():
    g = torch.Generator().manual_seed(0)
    for _ in range(1000):
        n = int(torch.randint(1, 20, (1,), generator=g))
        sims = torch.rand(n, generator=g) * 2 - 1
        tau = float(torch.rand(1, generator=g) * 2 - 1)
        above = sum(1 for s in sims.tolist() if s > tau)
        below = sum(1 for s in sims.tolist() if s < tau)
        assert attack_success_rate(sims, tau) == pytest.approx(above / n)
        assert erasion_success_rate(sims, tau) == pytest.approx(below / n)


def test_ties_count_as_failures():
    sims = torch.tensor([0.5, 0.5, 0.6, 0.4])
    assert attack_success_rate(sims, 0.5) == 0.25
    assert erasion_success_rate(sims, 0.5) == 0.25


def test_empty_sets_raise():
    with pytest.raises(EmptySetError):
        attack_success_rate(torch.tensor([]), 0.5)
    with pytest.raises(EmptySetError):
        erasion_success_rate(torch.tensor([]), 0.5)


def test_model_rates(models, x_cov, x_target):
    model = models[0]
    sims = target_similarities(model, x_cov, x_target)
    assert sims.shape == (4,)
    assert asr(model, x_cov, x_target) == attack_success_rate(sims, 0.5)
    assert esr(model, x_cov, x_target) == erasion_success_rate(sims, 0.3)
    assert asr(model, x_cov, x_target, tau=-2.0) == 1.0
    assert esr(model, x_cov, x_target, tau=-2.0) == 0.0
    assert asr(models[1], x_target, x_target, tau=0.99) == 1.0


def test_missing_threshold(models, x_cov, x_target):
    bare = SurrogateModel("bare", models[0].network, models[0].image_size)
    with pytest.raises(MissingComponentError):
        asr(bare, x_cov, x_target)
    with pytest.raises(MissingComponentError):
        esr(bare, x_cov, x_target)


def test_quality_metrics():
    a = torch.zeros(2, 3, 4, 4)
    b = torch.full((2, 3, 4, 4), 0.5)
    q = quality_metrics(a, b)
    assert q.l1 == pytest.approx(0.5)
    assert q.mse == pytest.approx(0.25)
    assert q.psnr == pytest.approx(10 * math.log10(4 / 0.25), rel=1e-5)
    assert quality_metrics(a, a).psnr == math.inf
    with pytest.raises(InputShapeError):
        quality_metrics(a, b[:1])
