import math

import pytest
import torch

from veilface.utils.math import (
    effective_sigma,
    from_signed_range,
    to_signed_range,
    unit_eps_to_signed,
)


def test_signed_range_conversion():
    pixels = torch.tensor([0.0, 127.5, 255.0])
    assert torch.equal(to_signed_range(pixels), torch.tensor([-1.0, 0.0, 1.0]))
    assert from_signed_range(torch.tensor([-1.0, 1.0])).tolist() == [0, 255]
    assert from_signed_range(torch.tensor([-2.0, 3.0])).tolist() == [0, 255]


def test_unit_eps_to_signed():
    assert unit_eps_to_signed(4 / 255) == pytest.approx(8 / 255)
    assert unit_eps_to_signed(0.0) == 0.0


def test_effective_sigma():
    assert effective_sigma(30.0, (3, 256, 256)) == pytest.approx(30.0)
    assert effective_sigma(30.0, (3, 32, 32)) == pytest.approx(30.0 / 8)
    assert effective_sigma(30.0, (3, 16, 16)) == pytest.approx(
        30.0 * math.sqrt(3 * 16 * 16 / (3 * 256 * 256))
    )
