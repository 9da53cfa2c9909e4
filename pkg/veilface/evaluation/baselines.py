import logging
from typing import Callable, Iterable, Optional

import torch

from veilface.surrogate.model import SurrogateModel, cosine_similarity, embed

logger = logging.getLogger(__name__)

StepHook = Callable[[int, torch.Tensor], None]


def target_loss(
    models: Iterable[SurrogateModel], x: torch.Tensor, x_target: torch.Tensor
) -> torch.Tensor:
    """Mean over models of 1 - cos(FR(x), FR(x_target)), averaged over the batch."""
    losses = [
        (1.0 - cosine_similarity(embed(m, x), embed(m, x_target).detach())).mean()
        for m in models
    ]
    return torch.stack(losses).mean()


def pgd_baseline(
    models: Iterable[SurrogateModel],
    x: torch.Tensor,
    x_target: torch.Tensor,
    eps: float,
    steps: int,
    step_size: float,
    on_step: Optional[StepHook] = None,
) -> torch.Tensor:
    """
    Targeted PGD: signed-gradient descent on the impersonation loss, projected
    onto the L-inf ball around `x` and the [-1, 1] pixel range after every step.

    Args:
        models (Iterable[SurrogateModel]): White-box models attacked jointly.

        x (torch.Tensor): Clean faces in [-1, 1].

        x_target (torch.Tensor): Target face.

        eps (float): L-inf budget in [-1, 1] units.

        steps (int): Iterations, >= 1.

        step_size (float): Signed step length.

        on_step (Callable, optional): Called with (step, x_adv) after each projection.

    Returns:
        torch.Tensor: Adversarial faces with ||out - x||_inf <= eps.
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    models = list(models)
    x = x.detach()
    x_adv = x.clone()
    for step in range(steps):
        x_adv.requires_grad_(True)
        loss = target_loss(models, x_adv, x_target)
        (grad,) = torch.autograd.grad(loss, x_adv)
        x_adv = x_adv.detach() - step_size * grad.sign()
        delta = torch.clamp(x_adv - x, min=-eps, max=eps)
        x_adv = torch.clamp(x + delta, min=-1.0, max=1.0).detach()
        if on_step is not None:
            on_step(step, x_adv)
    return x_adv


def fgsm_baseline(
    models: Iterable[SurrogateModel],
    x: torch.Tensor,
    x_target: torch.Tensor,
    eps: float,
    on_step: Optional[StepHook] = None,
) -> torch.Tensor:
    """Single signed-gradient step toward the target: PGD with one step of size eps."""
    return pgd_baseline(models, x, x_target, eps, 1, eps, on_step)
