import pytest
import torch

from veilface.generator.networks import Discriminator, Generator, inject
from veilface.generator.types import FeaturePyramid, GeneratorConfig
from veilface.utils.exceptions import DimensionMismatchError, InvalidAttributeError


def test_generator_config_geometry():
    with pytest.raises(ValueError):
        GeneratorConfig(image_size=20, enc_channels=[4, 4, 4])
    with pytest.raises(ValueError):
        GeneratorConfig(kernel_size=3)
    with pytest.raises(ValueError):
        GeneratorConfig(enc_channels=[4])
    config = GeneratorConfig(image_size=16, enc_channels=[2, 2], dis_channels=[2])
    assert config.depth == 2
    assert config.padding == 1


def test_encoder_pyramid(generator, x_cov):
    z = generator.encode(x_cov)
    assert len(z) == 4
    assert [t.shape[-1] for t in z] == [8, 4, 2, 1]
    assert all(t.shape[:2] == (4, 2) for t in z)


def test_generator_output(generator, x_cov, att_b):
    out = generator(x_cov, att_b)
    assert out.shape == x_cov.shape
    assert out.abs().max() <= 1.0
    with pytest.raises(InvalidAttributeError):
        generator(x_cov, torch.zeros(4, 2))


def test_clean_branch_with_equal_inputs_is_neutral(generator, x_cov, att_b):
    z = generator.encode(x_cov)
    plain = generator.decoder(z, att_b)
    injected = generator.decoder(z, att_b, clean=z, gamma=0.7)
    assert torch.allclose(plain, injected, atol=1e-6)


def test_inject():
    clean, adv = torch.ones(2), torch.zeros(2)
    assert torch.equal(inject(clean, adv, 0.25), torch.full((2,), 0.25))


def test_pyramid_compatibility():
    a = FeaturePyramid([torch.zeros(1, 2, 4, 4), torch.zeros(1, 2, 2, 2)])
    b = FeaturePyramid([torch.ones(1, 2, 4, 4), torch.ones(1, 2, 2, 2)])
    a.check_compatible(b)
    with pytest.raises(DimensionMismatchError):
        a.check_compatible(FeaturePyramid([torch.zeros(1, 2, 4, 4)]))
    with pytest.raises(DimensionMismatchError):
        a.check_compatible(
            FeaturePyramid([torch.zeros(1, 2, 4, 4), torch.zeros(1, 3, 2, 2)])
        )


def test_discriminator_heads(generator_config, x_cov):
    d = Discriminator(generator_config)
    logit_rf, logit_att = d(x_cov)
    assert logit_rf.shape == (4,)
    assert logit_att.shape == (4, generator_config.n_attributes)
    p_rf, p_att = d.probabilities(x_cov)
    assert torch.all((p_rf > 0) & (p_rf < 1))
    assert torch.all((p_att > 0) & (p_att < 1))


def test_snapshot_restore(generator: Generator):
    snap = generator.snapshot()
    with torch.no_grad():
        for p in generator.parameters():
            p.add_(1.0)
    generator.restore(snap)
    for k, v in generator.state_dict().items():
        assert torch.equal(v, snap[k])


def test_encoder_gradient_matches_finite_differences(generator64):
    g = torch.Generator().manual_seed(0)
    x = torch.rand(1, 3, 16, 16, generator=g, dtype=torch.float64) * 2 - 1
    x.requires_grad_(True)

    def pyramid_energy(x):
        return sum((t**2).sum() for t in generator64.encode(x))

    assert torch.autograd.gradcheck(pyramid_energy, (x,), atol=1e-6, rtol=1e-3)
