import copy
from typing import Optional

import torch
from torch import nn

from veilface.generator.networks import Decoder, Encoder, Generator
from veilface.generator.types import GeneratorConfig
from veilface.restorer.types import RESTORER_ATTRIBUTE_INIT
from veilface.utils.tensor import ensure_image_batch, ensure_same_shape


class Restorer(nn.Module):
    """
    Blind restorer R mapping protected faces back to the clean domain.

    R reuses the generator's encoder/decoder structure. Its decoder is
    conditioned on a learned constant attribute vector instead of a label, so
    `restore` only ever needs the protected image.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        self.encoder = Encoder(config)
        self.decoder = Decoder(config)
        self.attributes = nn.Parameter(
            torch.full((config.n_attributes,), RESTORER_ATTRIBUTE_INIT)
        )

    @classmethod
    def from_generator(cls, generator: Generator) -> "Restorer":
        """
        Builds R with parameters bitwise equal to the generator's snapshot.

        Args:
            generator (Generator): Trained stage-1 generator.

        Returns:
            Restorer: A trainable restorer.
        """
        restorer = cls(generator.config)
        restorer.encoder.load_state_dict(copy.deepcopy(generator.encoder.state_dict()))
        restorer.decoder.load_state_dict(copy.deepcopy(generator.decoder.state_dict()))
        restorer.to(next(generator.parameters()).device)
        for p in restorer.parameters():
            p.requires_grad_(True)
        return restorer

    def restore(self, x_adv: torch.Tensor) -> torch.Tensor:
        """
        Restores protected faces; x_cov is never needed.

        Args:
            x_adv (torch.Tensor): Protected faces, (3, H, W) or (N, 3, H, W).

        Returns:
            torch.Tensor: x_rec in [-1, 1] with the shape of `x_adv`.

        Raises:
            InputShapeError: If `x_adv` is not an image batch of the configured size.
        """
        single = x_adv.dim() == 3
        x = ensure_image_batch(x_adv, self.config.image_size)
        att = self.attributes.unsqueeze(0).expand(x.shape[0], -1)
        out = self.decoder(self.encoder(x), att)
        return out.squeeze(0) if single else out

    def forward(self, x_adv: torch.Tensor) -> torch.Tensor:
        return self.restore(x_adv)


def erasion_loss(
    x_rec: torch.Tensor, x_cov: torch.Tensor, reduction: Optional[str] = "sum"
) -> torch.Tensor:
    """
    Erasion loss sum_n ||x_rec^(n) - x_cov^(n)||_2.

    Args:
        x_rec (torch.Tensor): Restored faces.

        x_cov (torch.Tensor): Clean faces, paired with `x_rec`.

        reduction (str, optional): "sum" (default), "mean", or None for
            per-sample norms.

    Returns:
        torch.Tensor: Non-negative loss, additive over the batch.

    Raises:
        InputShapeError: If the batch is not paired.
    """
    ensure_same_shape(x_rec, x_cov)
    diff = x_rec - x_cov
    if diff.dim() == 3:
        diff = diff.unsqueeze(0)
    norms = torch.linalg.vector_norm(diff.flatten(1), dim=-1)
    if reduction is None:
        return norms
    if reduction == "mean":
        return norms.mean()
    if reduction == "sum":
        return norms.sum()
    raise ValueError(f"Unknown reduction `{reduction}`")
