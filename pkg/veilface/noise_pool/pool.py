import logging
from typing import Optional

import torch

from veilface.noise_pool.ops import apply, sample_training_op
from veilface.noise_pool.types import NoiseKind, NoiseOp, NoisePoolConfig
from veilface.utils.seed import derive_seed, make_generator

logger = logging.getLogger(__name__)


class NoisePool:
    """
    Training-time corruption pool: one op drawn per batch, applied to each
    sample with probability `prob` (identity otherwise).
    """

    def __init__(self, config: Optional[NoisePoolConfig] = None):
        self.config = config or NoisePoolConfig()
        self.ops = [self._op(kind) for kind in self.config.kinds]

    def _op(self, kind: NoiseKind) -> NoiseOp:
        if kind == NoiseKind.JPEG:
            return NoiseOp.jpeg(self.config.jpeg_quality)
        if kind == NoiseKind.GAUSSIAN:
            return NoiseOp.gaussian(self.config.gaussian_var)
        if kind == NoiseKind.RESIZE:
            return NoiseOp.resize(self.config.resize_factor)
        return NoiseOp.identity()

    def sample(self, seed: int) -> NoiseOp:
        return sample_training_op(seed, self.ops)

    def corrupt(self, x: torch.Tensor, seed: int) -> torch.Tensor:
        """
        Corrupts a batch. Equal seeds give equal draws, so the same corruption
        can be reapplied to regenerated images.

        Args:
            x (torch.Tensor): (N, 3, H, W) images in [-1, 1].

            seed (int): Batch seed.

        Returns:
            torch.Tensor: The batch with the drawn op applied to a seeded subset.
        """
        if self.config.prob == 0.0 or not self.ops:
            return x
        op = self.sample(derive_seed(seed, "draw"))
        if op.kind == NoiseKind.IDENTITY:
            return x
        noisy = apply(op, x, derive_seed(seed, "apply"))
        if self.config.prob == 1.0:
            return noisy
        generator = make_generator(derive_seed(seed, "mask"))
        mask = torch.rand(x.shape[0], generator=generator) < self.config.prob
        mask = mask.to(x.device).view(-1, *([1] * (x.dim() - 1)))
        return torch.where(mask, noisy, x)
