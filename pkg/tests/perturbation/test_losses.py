import math

import pytest
import torch

from veilface.perturbation.losses import perturbation_loss


def test_example_norm():
    x = torch.full((1, 3, 4, 4), 0.1)
    ref = torch.zeros(1, 3, 4, 4)
    loss = perturbation_loss(x, ref, 0.1)
    assert loss.item() == pytest.approx(0.1 * math.sqrt(48), abs=1e-4)


def test_floor_returns_sigma_exactly():
    g = torch.Generator().manual_seed(0)
    for _ in range(200):
        x = torch.rand(4, 3, 4, 4, generator=g) * 0.01
        loss = perturbation_loss(x, torch.zeros_like(x), 5.0)
        assert loss.item() == 5.0


def test_floor_has_zero_gradient():
    x = torch.full((2, 3, 4, 4), 0.01, requires_grad=True)
    perturbation_loss(x, torch.zeros_like(x), 5.0).backward()
    assert torch.equal(x.grad, torch.zeros_like(x))


def test_floor_applies_per_image():
    x = torch.zeros(2, 3, 4, 4)
    x[0] = 1.0
    loss = perturbation_loss(x, torch.zeros_like(x), 1.0)
    assert loss.item() == pytest.approx((math.sqrt(48) + 1.0) / 2)


def test_invalid_sigma():
    with pytest.raises(ValueError):
        perturbation_loss(torch.zeros(1, 3, 2, 2), torch.zeros(1, 3, 2, 2), 0.0)
