import math
from typing import Optional

import kornia
import torch

from veilface.evaluation.types import QualityMetrics
from veilface.surrogate.model import SurrogateModel, cosine_similarity, embed
from veilface.utils.exceptions import EmptySetError, MissingComponentError
from veilface.utils.tensor import ensure_same_shape

# Width of the [-1, 1] pixel range.
PIXEL_RANGE = 2.0


def attack_success_rate(similarities: torch.Tensor, tau: float) -> float:
    """Fraction of similarities strictly above `tau`; a tie is a failure."""
    if similarities.numel() == 0:
        raise EmptySetError("Cannot compute ASR over an empty set")
    return (similarities.flatten().double() > tau).double().mean().item()


def erasion_success_rate(similarities: torch.Tensor, tau: float) -> float:
    """Fraction of similarities strictly below `tau`; a tie is a failure."""
    if similarities.numel() == 0:
        raise EmptySetError("Cannot compute ESR over an empty set")
    return (similarities.flatten().double() < tau).double().mean().item()


@torch.no_grad()
def target_similarities(
    model: SurrogateModel,
    images: torch.Tensor,
    x_target: torch.Tensor,
    batch_size: int = 64,
) -> torch.Tensor:
    """
    cos(FR(x), FR(x_target)) for every image.

    Raises:
        EmptySetError: If `images` is empty.
    """
    if images.dim() == 3:
        images = images.unsqueeze(0)
    if images.shape[0] == 0:
        raise EmptySetError("No images to evaluate")
    target = embed(model, x_target)
    chunks = [
        cosine_similarity(embed(model, images[i : i + batch_size]), target)
        for i in range(0, images.shape[0], batch_size)
    ]
    return torch.cat(chunks)


def asr(
    model: SurrogateModel,
    protected: torch.Tensor,
    x_target: torch.Tensor,
    tau: Optional[float] = None,
) -> float:
    """
    Attack success rate: share of protected faces whose similarity to the
    target exceeds the model's attack threshold.

    Args:
        model (SurrogateModel): Evaluated model.

        protected (torch.Tensor): Protected faces.

        x_target (torch.Tensor): Target face.

        tau (float, optional): Overrides `model.tau_attack`.

    Returns:
        float: ASR in [0, 1].

    Raises:
        MissingComponentError: If no threshold is available.
        EmptySetError: If `protected` is empty.
    """
    tau = model.tau_attack if tau is None else tau
    if tau is None:
        raise MissingComponentError(f"{model.id} has no calibrated attack threshold")
    return attack_success_rate(target_similarities(model, protected, x_target), tau)


def esr(
    model: SurrogateModel,
    restored: torch.Tensor,
    x_target: torch.Tensor,
    tau: Optional[float] = None,
) -> float:
    """
    Erasion success rate: share of restored faces whose similarity to the
    target falls below the model's erasion threshold. Every restored face
    counts in the denominator.

    Raises:
        MissingComponentError: If no threshold is available.
        EmptySetError: If `restored` is empty.
    """
    tau = model.tau_erasion if tau is None else tau
    if tau is None:
        raise MissingComponentError(f"{model.id} has no calibrated erasion threshold")
    return erasion_success_rate(target_similarities(model, restored, x_target), tau)


def quality_metrics(a: torch.Tensor, b: torch.Tensor) -> QualityMetrics:
    """
    L1, MSE and PSNR between two image sets in [-1, 1].

    Args:
        a (torch.Tensor): Images.

        b (torch.Tensor): Images of the same shape.

    Returns:
        QualityMetrics: PSNR uses data range 2 and is +inf for identical sets.

    Raises:
        InputShapeError: If the shapes differ.
    """
    ensure_same_shape(a, b)
    a, b = a.detach().double(), b.detach().double()
    mse = torch.mean((a - b) ** 2).item()
    l1 = torch.mean((a - b).abs()).item()
    if mse == 0.0:
        psnr = math.inf
    else:
        psnr = kornia.metrics.psnr(a, b, PIXEL_RANGE).item()
    return QualityMetrics(l1=l1, mse=mse, psnr=psnr)
