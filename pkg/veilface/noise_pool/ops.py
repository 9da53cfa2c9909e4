import logging
import math
from typing import Callable, Sequence

import kornia
import torch
import torch.nn.functional as F

from veilface.noise_pool.types import (
    DEFAULT_CROP_FRACTION,
    DEFAULT_EVAL_RESIZE,
    DEFAULT_GAUSSIAN_VAR,
    DEFAULT_JPEG_QUALITY,
    DEFAULT_MAX_ANGLE,
    DEFAULT_MEDIAN_KERNEL,
    NoiseKind,
    NoiseOp,
)
from veilface.utils.exceptions import (
    EmptySetError,
    NotDifferentiableError,
    UnknownNoiseOpError,
)
from veilface.utils.seed import derive_seed, make_generator
from veilface.utils.tensor import ensure_image_batch

logger = logging.getLogger(__name__)


def _identity(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    return x


def _jpeg(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    quality = torch.full(
        (x.shape[0],), float(op.params["quality"]), dtype=x.dtype, device=x.device
    )
    unit = (x.clamp(-1.0, 1.0) + 1.0) / 2.0
    return kornia.enhance.jpeg_codec_differentiable(unit, quality) * 2.0 - 1.0


def _gaussian(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    var = float(op.params["var"])
    if var == 0.0:
        return x
    generator = make_generator(seed)
    noise = torch.randn(x.shape, generator=generator, dtype=x.dtype)
    return x + math.sqrt(var) * noise.to(x.device)


def _resample(x: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    return F.interpolate(x, size=size, mode="bilinear", align_corners=False)


def _resize(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    h, w = x.shape[-2:]
    factor = float(op.params["factor"])
    small = (max(1, round(h * factor)), max(1, round(w * factor)))
    return _resample(_resample(x, small), (h, w))


def _median(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    k = int(op.params["kernel"])
    return kornia.filters.median_blur(x, (k, k))


def _rotate(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    if "angle" in op.params:
        angles = torch.full((x.shape[0],), float(op.params["angle"]), dtype=x.dtype)
    else:
        max_angle = float(op.params["max_angle"])
        u = torch.rand(x.shape[0], generator=make_generator(seed), dtype=x.dtype)
        angles = (2.0 * u - 1.0) * max_angle
    return kornia.geometry.transform.rotate(x, angles.to(x.device))


def _center_crop(x: torch.Tensor, op: NoiseOp, seed: int) -> torch.Tensor:
    h, w = x.shape[-2:]
    fraction = float(op.params["fraction"])
    ch, cw = max(1, round(h * fraction)), max(1, round(w * fraction))
    top, left = (h - ch) // 2, (w - cw) // 2
    return _resample(x[..., top : top + ch, left : left + cw], (h, w))


_APPLY: dict[NoiseKind, Callable[[torch.Tensor, NoiseOp, int], torch.Tensor]] = {
    NoiseKind.IDENTITY: _identity,
    NoiseKind.JPEG: _jpeg,
    NoiseKind.GAUSSIAN: _gaussian,
    NoiseKind.RESIZE: _resize,
    NoiseKind.MEDIAN_FILTER: _median,
    NoiseKind.ROTATE: _rotate,
    NoiseKind.CENTER_CROP: _center_crop,
}


def apply(op: NoiseOp, x: torch.Tensor, seed: int = 0) -> torch.Tensor:
    """
    Applies one corruption. The result is a pure function of (x, op, seed).

    Args:
        op (NoiseOp): The corruption.

        x (torch.Tensor): Image(s) in [-1, 1], (3, H, W) or (N, 3, H, W).

        seed (int): Seed of any random draw the op makes.

    Returns:
        torch.Tensor: Corrupted image(s), same shape, clamped to [-1, 1]. The
        identity op returns `x` itself.

    Raises:
        UnknownNoiseOpError: If the kind has no implementation.
    """
    fn = _APPLY.get(op.kind)
    if fn is None:
        raise UnknownNoiseOpError(f"Unknown noise op `{op.kind}`")
    if op.kind == NoiseKind.IDENTITY:
        return x
    single = x.dim() == 3
    batch = ensure_image_batch(x)
    out = fn(batch, op, seed).clamp(-1.0, 1.0)
    return out.squeeze(0) if single else out


def sample_training_op(seed: int, pool: Sequence[NoiseOp]) -> NoiseOp:
    """
    Draws one op uniformly from the pool.

    Args:
        seed (int): Draw seed; the same seed always gives the same op.

        pool (Sequence[NoiseOp]): Candidate ops.

    Returns:
        NoiseOp: The drawn op.

    Raises:
        EmptySetError: If the pool is empty.
    """
    if len(pool) == 0:
        raise EmptySetError("The noise pool is empty")
    generator = make_generator(derive_seed(seed, "noise-op"))
    index = int(torch.randint(len(pool), (1,), generator=generator).item())
    return pool[index]


def gradient_probe(op: NoiseOp, x: torch.Tensor, seed: int = 0) -> float:
    """
    Max-abs gradient of sum(apply(op, x)) with respect to x.

    Args:
        op (NoiseOp): A differentiable op.

        x (torch.Tensor): Probe image(s).

        seed (int): Seed passed to the op.

    Returns:
        float: max |d loss / d x|; positive for a non-degenerate x.

    Raises:
        NotDifferentiableError: If the op is not differentiable.
    """
    if not op.differentiable:
        raise NotDifferentiableError(f"{op.name} is not differentiable")
    x = x.detach().clone().requires_grad_(True)
    out = apply(op, x, seed)
    (grad,) = torch.autograd.grad(out.sum(), x, allow_unused=True)
    if grad is None:
        return 0.0
    return grad.abs().max().item()


def parse_noise_op(spec: str) -> NoiseOp:
    """
    Parses the `kind[:value]` shorthand used by configs and the command line,
    e.g. "jpeg:50", "resize:0.5", "rotate:30", "center_crop".

    Raises:
        UnknownNoiseOpError: If the kind is not known.
    """
    kind, _, value = spec.strip().partition(":")
    factories = {
        NoiseKind.IDENTITY.value: lambda v: NoiseOp.identity(),
        NoiseKind.JPEG.value: lambda v: NoiseOp.jpeg(
            float(v or DEFAULT_JPEG_QUALITY)
        ),
        NoiseKind.GAUSSIAN.value: lambda v: NoiseOp.gaussian(
            float(v or DEFAULT_GAUSSIAN_VAR)
        ),
        NoiseKind.RESIZE.value: lambda v: NoiseOp.resize(
            float(v or DEFAULT_EVAL_RESIZE)
        ),
        NoiseKind.MEDIAN_FILTER.value: lambda v: NoiseOp.median_filter(
            int(v or DEFAULT_MEDIAN_KERNEL)
        ),
        NoiseKind.ROTATE.value: lambda v: NoiseOp.rotate(float(v or DEFAULT_MAX_ANGLE)),
        NoiseKind.CENTER_CROP.value: lambda v: NoiseOp.center_crop(
            float(v or DEFAULT_CROP_FRACTION)
        ),
    }
    if kind not in factories:
        raise UnknownNoiseOpError(f"Unknown noise op `{spec}`")
    return factories[kind](value)


def evaluation_transforms() -> list[NoiseOp]:
    """The robustness-sweep preset, identity first."""
    return [
        NoiseOp.identity(),
        NoiseOp.jpeg(DEFAULT_JPEG_QUALITY),
        NoiseOp.gaussian(DEFAULT_GAUSSIAN_VAR),
        NoiseOp.resize(DEFAULT_EVAL_RESIZE),
        NoiseOp.median_filter(DEFAULT_MEDIAN_KERNEL),
        NoiseOp.rotate(DEFAULT_MAX_ANGLE),
        NoiseOp.center_crop(DEFAULT_CROP_FRACTION),
    ]
