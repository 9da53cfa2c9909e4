from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from veilface.surrogate.types import LossHistory, SurrogateRole
from veilface.utils.exceptions import DimensionMismatchError, InsufficientDataError
from veilface.utils.tensor import ensure_image_batch


class SurrogateModel:
    """
    A differentiable face-embedding function together with its identity
    metadata and calibrated decision thresholds.

    Attributes:
        id (str): Model identifier.

        network (nn.Module): Maps (N, 3, H, W) images to (N, d) raw features.

        image_size (int): Expected square input size.

        role (SurrogateRole): White-box training surrogate or black-box evaluator.

        tau_attack (float, optional): Threshold used for attack success.

        tau_erasion (float, optional): Threshold used for erasion success.
    """

    def __init__(
        self,
        id: str,
        network: nn.Module,
        image_size: int,
        role: SurrogateRole = SurrogateRole.WHITE_BOX_TRAIN,
        tau_attack: Optional[float] = None,
        tau_erasion: Optional[float] = None,
    ):
        self.id = id
        self.network = network.eval()
        self.image_size = image_size
        self.role = role
        self.tau_attack = tau_attack
        self.tau_erasion = tau_erasion

    def freeze(self) -> "SurrogateModel":
        for p in self.network.parameters():
            p.requires_grad_(False)
        return self

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        return embed(self, x)

    def __repr__(self) -> str:
        return f"SurrogateModel(id={self.id!r}, role={self.role.value})"


def embed(model: SurrogateModel, x: torch.Tensor) -> torch.Tensor:
    """
    Embeds a batch of images and L2-normalizes the result.

    Args:
        model (SurrogateModel): The face-embedding model.

        x (torch.Tensor): (N, 3, H, W) or (3, H, W) images in [-1, 1].

    Returns:
        torch.Tensor: (N, d) unit-norm embeddings. Gradients flow to `x`.

    Raises:
        InputShapeError: If `x` does not match the model's input size.
    """
    x = ensure_image_batch(x, model.image_size)
    return F.normalize(model.network(x), p=2, dim=-1)


def cosine_similarity(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """
    Cosine similarity between (batches of) embeddings, clamped to [-1, 1].

    Args:
        a (torch.Tensor): (d,) or (N, d) embeddings.

        b (torch.Tensor): (d,) or (N, d) embeddings; broadcast against `a`.

    Returns:
        torch.Tensor: Similarities, shape (N,) or scalar.

    Raises:
        DimensionMismatchError: If the embedding dimensions differ.
    """
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(
            f"Embedding dimensions differ: {a.shape[-1]} vs {b.shape[-1]}"
        )
    return F.cosine_similarity(a, b, dim=-1).clamp(-1.0, 1.0)


class SurrogateEnsemble:
    """
    Ordered white-box surrogates used by the meta-auxiliary attack, together
    with the per-model loss history that drives the adaptive weights.
    """

    def __init__(
        self, models: Sequence[SurrogateModel], history: Optional[LossHistory] = None
    ):
        if len(models) < 2:
            raise InsufficientDataError(
                f"An ensemble needs at least 2 surrogate models, got {len(models)}"
            )
        self.models = list(models)
        self.history = history or LossHistory.bootstrap(len(self.models))
        if self.history.size != len(self.models):
            raise DimensionMismatchError("Loss history size differs from ensemble size")

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, index: int) -> SurrogateModel:
        return self.models[index]

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.models]
