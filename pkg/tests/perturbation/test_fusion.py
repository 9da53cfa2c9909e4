import pytest
import torch

from veilface.generator.types import FeaturePyramid
from veilface.perturbation.fusion import (
    attribute_edit,
    encoder_params,
    fuse_features,
    generate_protected,
    init_perturbation_encoder,
)
from veilface.perturbation.types import FusionConfig
from veilface.utils.exceptions import MissingComponentError


def test_init_copies_encoder_bitwise(generator):
    encoder = init_perturbation_encoder(generator)
    for p, q in zip(encoder.parameters(), generator.encoder.parameters()):
        assert torch.equal(p, q)
        assert p.data_ptr() != q.data_ptr()
        assert p.requires_grad
    assert list(encoder_params(encoder)) == [n for n, _ in encoder.named_parameters()]


@pytest.mark.parametrize("beta,gamma", [(0.0, 0.0), (0.5, 0.3), (1.0, 1.0), (0.2, 0.9)])
def test_fresh_encoder_reproduces_attribute_edit(generator, beta, gamma):
    encoder = init_perturbation_encoder(generator)
    cfg = FusionConfig(beta=beta, gamma=gamma)
    g = torch.Generator().manual_seed(1)
    for _ in range(25):
        x = torch.rand(4, 3, 16, 16, generator=g) * 2 - 1
        att = (torch.rand(4, 3, generator=g) < 0.5).float()
        with torch.no_grad():
            protected = generate_protected(x, att, cfg, generator, encoder)
            plain = attribute_edit(generator, x, att)
        assert (protected - plain).abs().max() <= 1e-6


def test_fuse_features():
    ft = FeaturePyramid([torch.ones(1, 2, 4, 4), torch.ones(1, 2, 2, 2)])
    perb = FeaturePyramid([torch.zeros(1, 2, 4, 4), torch.zeros(1, 2, 2, 2)])
    fused = fuse_features(ft, perb, 0.25)
    assert torch.allclose(fused[0], torch.full((1, 2, 4, 4), 0.25))
    assert torch.equal(fuse_features(ft, perb, 1.0)[1], ft[1])
    with pytest.raises(ValueError):
        fuse_features(ft, perb, 1.5)


def test_generate_protected_errors(generator, x_cov, att_b):
    with pytest.raises(MissingComponentError):
        generate_protected(x_cov, att_b, FusionConfig(), generator, None)
    encoder = init_perturbation_encoder(generator)
    with pytest.raises(ValueError):
        bad = FusionConfig.model_construct(beta=2.0, gamma=0.3)
        generate_protected(x_cov, att_b, bad, generator, encoder)


def test_protect_broadcasts_single_attribute_vector(protector, x_cov):
    out = protector.protect(x_cov, torch.tensor([1.0, 0.0, 1.0]))
    assert out.shape == x_cov.shape


def test_gradients_reach_only_perturbation_encoder(protector, x_cov, att_b):
    protector.protect(x_cov, att_b).sum().backward()
    assert any(p.grad is not None for p in protector.perturb_encoder.parameters())
    assert all(p.grad is None for p in protector.generator.parameters())


def test_substitute_params(protector, x_cov, att_b):
    params = protector.params()
    shifted = {k: v + 0.5 for k, v in params.items()}
    with torch.no_grad():
        live = protector.protect(x_cov, att_b)
        same = protector.protect(x_cov, att_b, params)
        other = protector.protect(x_cov, att_b, shifted)
    assert torch.equal(live, same)
    assert not torch.equal(live, other)


def test_clean_injection_pulls_toward_clean_decode(generator64, protector64):
    g = torch.Generator().manual_seed(4)
    x = torch.rand(20, 3, 16, 16, generator=g, dtype=torch.float64) * 2 - 1
    att = (torch.rand(20, 3, generator=g) < 0.5).double()
    encoder = protector64.perturb_encoder
    with torch.no_grad():
        clean = attribute_edit(generator64, x, att)
        distances = [
            (
                generate_protected(
                    x, att, FusionConfig(beta=0.5, gamma=gamma), generator64, encoder
                )
                - clean
            )
            .flatten(1)
            .norm(dim=1)
            for gamma in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
    assert (distances[0] > 0).all()
    for looser, tighter in zip(distances, distances[1:]):
        assert (tighter <= looser + 1e-12).all()
    assert torch.equal(distances[-1], torch.zeros(20, dtype=torch.float64))
