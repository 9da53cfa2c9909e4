import math

import torch

# Image geometry the default perturbation floor is tuned for.
REFERENCE_IMAGE_SHAPE = (3, 256, 256)


def to_signed_range(x: torch.Tensor) -> torch.Tensor:
    """
    Converts 8-bit pixel values in [0, 255] to the internal [-1, 1] range.

    Args:
        x (torch.Tensor): Pixel values in [0, 255].

    Returns:
        torch.Tensor: Values v / 127.5 - 1.
    """
    return x / 127.5 - 1.0


def from_signed_range(x: torch.Tensor) -> torch.Tensor:
    """
    Converts [-1, 1] images back to 8-bit pixel values, rounding to nearest.

    Args:
        x (torch.Tensor): Values in [-1, 1].

    Returns:
        torch.Tensor: uint8 values in [0, 255].
    """
    return ((x.clamp(-1.0, 1.0) + 1.0) * 127.5).round().to(torch.uint8)


def unit_eps_to_signed(eps: float) -> float:
    """
    Converts an L-inf budget given for [0, 1] images to [-1, 1] units (doubled).

    Args:
        eps (float): Budget in [0, 1] pixel units, e.g. 4/255.

    Returns:
        float: The same perceptual budget in [-1, 1] units.
    """
    return 2.0 * eps


def effective_sigma(sigma: float, image_shape: tuple) -> float:
    """
    Rescales an unreduced L2 floor tuned at 3x256x256 to another image size.

    Args:
        sigma (float): Floor at reference resolution.

        image_shape (tuple): (C, H, W) of the images being trained on.

    Returns:
        float: sigma * sqrt(numel / numel_reference).
    """
    numel = math.prod(image_shape)
    return sigma * math.sqrt(numel / math.prod(REFERENCE_IMAGE_SHAPE))
