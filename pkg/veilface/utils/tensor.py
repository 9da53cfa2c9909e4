from typing import Optional

import torch

from veilface.utils.exceptions import (
    InputShapeError,
    InvalidAttributeError,
)


def ensure_image_batch(
    x: torch.Tensor, image_size: Optional[int] = None, channels: int = 3
) -> torch.Tensor:
    """
    Validates a batch of images and promotes a single C x H x W image to a batch.

    Args:
        x (torch.Tensor): Image or batch of images.

        image_size (int, optional): Expected square spatial size.

        channels (int): Expected channel count.

    Returns:
        torch.Tensor: A 4-d tensor (N, C, H, W).

    Raises:
        InputShapeError: If the tensor rank, channel count or spatial size is wrong.
    """
    if x.dim() == 3:
        x = x.unsqueeze(0)
    if x.dim() != 4 or x.shape[1] != channels:
        raise InputShapeError(
            f"Expected (N, {channels}, H, W) images, got {tuple(x.shape)}"
        )
    if image_size is not None and tuple(x.shape[-2:]) != (image_size, image_size):
        raise InputShapeError(
            f"Expected spatial size {image_size}x{image_size}, "
            f"got {tuple(x.shape[-2:])}"
        )
    return x


def ensure_same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise InputShapeError(
            f"Shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}"
        )


def ensure_attributes(att: torch.Tensor, n_attributes: int) -> torch.Tensor:
    """
    Validates a (batch of) binary attribute vectors.

    Args:
        att (torch.Tensor): Shape (n,) or (N, n) with entries in {0, 1}.

        n_attributes (int): Expected width n.

    Returns:
        torch.Tensor: A 2-d tensor (N, n).

    Raises:
        InvalidAttributeError: If the width is wrong or entries are not binary.
    """
    if att.dim() == 1:
        att = att.unsqueeze(0)
    if att.dim() != 2 or att.shape[1] != n_attributes:
        raise InvalidAttributeError(
            f"Expected {n_attributes} attribute bits, got shape {tuple(att.shape)}"
        )
    if not torch.all((att == 0) | (att == 1)):
        raise InvalidAttributeError("Attribute entries must be 0 or 1")
    return att
