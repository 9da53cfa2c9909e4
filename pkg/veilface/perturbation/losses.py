import torch

from veilface.utils.tensor import ensure_same_shape


def perturbation_loss(
    x_adv: torch.Tensor, x_cov_attb: torch.Tensor, sigma1: float
) -> torch.Tensor:
    """
    Perturbation floor loss: max(sigma1, ||x_adv - x_cov^{att_b}||_2).

    The norm is the unreduced Euclidean norm of each image; the floor is applied
    per image and the result averaged over the batch. A norm exactly equal to
    sigma1 takes the constant branch, whose gradient is zero.

    Args:
        x_adv (torch.Tensor): Protected faces.

        x_cov_attb (torch.Tensor): Plain attribute-modified faces.

        sigma1 (float): Floor, > 0.

    Returns:
        torch.Tensor: Scalar loss, always >= sigma1.
    """
    if sigma1 <= 0:
        raise ValueError(f"sigma1 must be positive, got {sigma1}")
    ensure_same_shape(x_adv, x_cov_attb)
    diff = x_adv - x_cov_attb
    if diff.dim() == 3:
        diff = diff.unsqueeze(0)
    norms = torch.linalg.vector_norm(diff.flatten(1), dim=-1)
    floor = torch.full_like(norms, sigma1)
    return torch.where(norms > floor, norms, floor).mean()
