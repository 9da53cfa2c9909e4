import torch

from veilface.utils.seed import derive_seed, make_generator


def test_derive_seed_is_deterministic():
    assert derive_seed(0, "stage", 1) == derive_seed(0, "stage", 1)
    assert derive_seed(0, "stage", 1) != derive_seed(0, "stage", 2)
    assert derive_seed(0, "stage") != derive_seed(1, "stage")
    assert 0 <= derive_seed(123, "x") < 2**63


def test_make_generator():
    a = torch.rand(5, generator=make_generator(3))
    b = torch.rand(5, generator=make_generator(3))
    assert torch.equal(a, b)
