import pytest
import torch

from veilface.utils.exceptions import InputShapeError, InvalidAttributeError
from veilface.utils.tensor import (
    ensure_attributes,
    ensure_image_batch,
    ensure_same_shape,
)


def test_ensure_image_batch():
    assert ensure_image_batch(torch.zeros(3, 8, 8)).shape == (1, 3, 8, 8)
    assert ensure_image_batch(torch.zeros(2, 3, 8, 8), 8).shape == (2, 3, 8, 8)
    with pytest.raises(InputShapeError):
        ensure_image_batch(torch.zeros(2, 1, 8, 8))
    with pytest.raises(InputShapeError):
        ensure_image_batch(torch.zeros(2, 3, 8, 8), 16)
    with pytest.raises(InputShapeError):
        ensure_image_batch(torch.zeros(8, 8))


def test_ensure_same_shape():
    ensure_same_shape(torch.zeros(2, 3), torch.ones(2, 3))
    with pytest.raises(InputShapeError):
        ensure_same_shape(torch.zeros(2, 3), torch.zeros(3, 2))


def test_ensure_attributes():
    assert ensure_attributes(torch.tensor([0.0, 1.0, 1.0]), 3).shape == (1, 3)
    with pytest.raises(InvalidAttributeError):
        ensure_attributes(torch.tensor([0.0, 1.0]), 3)
    with pytest.raises(InvalidAttributeError):
        ensure_attributes(torch.tensor([0.0, 2.0, 1.0]), 3)
