from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch
from PIL import Image

from veilface.utils.math import from_signed_range, to_signed_range

PathLike = Union[str, Path]


def to_unit_range(x: torch.Tensor) -> torch.Tensor:
    return (x + 1.0) / 2.0


def from_unit_range(x: torch.Tensor) -> torch.Tensor:
    return x * 2.0 - 1.0


def load_image(path: PathLike, image_size: Optional[int] = None) -> torch.Tensor:
    """
    Reads an 8-bit RGB image into a (3, H, W) tensor in [-1, 1].

    Args:
        path (str | Path): Image file.

        image_size (int, optional): Resize to a square of this size (bilinear).

    Returns:
        torch.Tensor: The image, v / 127.5 - 1.
    """
    with Image.open(path) as img:
        img = img.convert("RGB")
        if image_size is not None and img.size != (image_size, image_size):
            img = img.resize((image_size, image_size), Image.Resampling.BILINEAR)
        array = np.asarray(img, dtype=np.float32)
    return to_signed_range(torch.from_numpy(array.copy()).permute(2, 0, 1))


def save_image(x: torch.Tensor, path: PathLike) -> Path:
    """
    Writes a (3, H, W) tensor in [-1, 1] as a lossless 8-bit RGB PNG.

    Values are rounded to the nearest 8-bit level, so a reload differs from
    the tensor by at most 1/255 in [-1, 1] units.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = from_signed_range(x.detach().cpu()).permute(1, 2, 0).numpy()
    Image.fromarray(array).save(path, format="PNG")
    return path
