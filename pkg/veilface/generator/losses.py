import torch
import torch.nn.functional as F

from veilface.generator.networks import Discriminator
from veilface.utils.exceptions import NumericalGuardError
from veilface.utils.tensor import ensure_attributes, ensure_same_shape

PROB_EPS = 1e-7


def clamp_probability(p: torch.Tensor) -> torch.Tensor:
    """
    Clamps probabilities into [eps, 1 - eps] so every log term is finite.

    Raises:
        NumericalGuardError: If a value is NaN or still outside (0, 1).
    """
    p = p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    if not torch.all((p > 0) & (p < 1)):
        raise NumericalGuardError(
            "Discriminator output outside (0, 1) after clamping (NaN input?)"
        )
    return p


def discriminator_loss(p_real: torch.Tensor, p_fake: torch.Tensor) -> torch.Tensor:
    """L_D = -log D_G(x_cov) - log(1 - D_G(x_adv)), averaged over the batch."""
    p_real, p_fake = clamp_probability(p_real), clamp_probability(p_fake)
    return (-torch.log(p_real) - torch.log(1.0 - p_fake)).mean()


def generator_adversarial_loss(p_fake: torch.Tensor) -> torch.Tensor:
    """L_G = -log D_G(x_adv), averaged over the batch."""
    return (-torch.log(clamp_probability(p_fake))).mean()


def attribute_bce(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy summed over attribute bits and averaged over the batch."""
    probs = clamp_probability(probs)
    labels = ensure_attributes(labels, probs.shape[-1]).to(probs.dtype)
    bce = -(labels * torch.log(probs) + (1.0 - labels) * torch.log(1.0 - probs))
    return bce.view(-1, probs.shape[-1]).sum(dim=-1).mean()


def gan_losses(
    discriminator: Discriminator, x_cov: torch.Tensor, x_adv: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Real/fake losses of the discriminator and generator.

    The discriminator term sees a detached `x_adv`, so it only trains D.

    Args:
        discriminator (Discriminator): Provides D_G.

        x_cov (torch.Tensor): Clean images.

        x_adv (torch.Tensor): Generated (protected or attribute-edited) images.

    Returns:
        tuple: (L_D, L_G), both non-negative.
    """
    p_real, _ = discriminator.probabilities(x_cov)
    p_fake_detached, _ = discriminator.probabilities(x_adv.detach())
    p_fake, _ = discriminator.probabilities(x_adv)
    return discriminator_loss(p_real, p_fake_detached), generator_adversarial_loss(
        p_fake
    )


def attribute_losses(
    discriminator: Discriminator,
    x_cov: torch.Tensor,
    att_a: torch.Tensor,
    x_gen: torch.Tensor,
    att_b: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Attribute classification losses: D_att on clean images against att_a
    (discriminator side) and on generated images against att_b (generator side).

    Returns:
        tuple: (L_att_D, L_att_G).
    """
    _, att_real = discriminator.probabilities(x_cov)
    _, att_fake = discriminator.probabilities(x_gen)
    return attribute_bce(att_real, att_a), attribute_bce(att_fake, att_b)


def reconstruction_loss(x_hat: torch.Tensor, x_cov: torch.Tensor) -> torch.Tensor:
    """Mean absolute error between the attribute-a reconstruction and the input."""
    ensure_same_shape(x_hat, x_cov)
    return F.l1_loss(x_hat, x_cov)
