import math
from dataclasses import dataclass, field

import torch
from pydantic import Field, model_validator

from veilface.utils.model import VeilBaseModel

# Rate denominators below this are treated as a converged history (rate = 1).
RATE_GUARD = 1e-8
WEIGHT_TOLERANCE = 1e-12


class TaskSplit(VeilBaseModel):
    """
    One primary surrogate and the remaining K-1 auxiliary surrogates.

    Attributes:
        primary_index (int): Zero-based index of the primary model.

        auxiliary_indices (list[int]): The other indices, in ensemble order.
    """

    primary_index: int
    auxiliary_indices: list[int]

    @model_validator(mode="after")
    def check_partition(self):
        if len(set(self.auxiliary_indices)) != len(self.auxiliary_indices):
            raise ValueError("auxiliary_indices contains duplicates")
        if self.primary_index in self.auxiliary_indices:
            raise ValueError("the primary model cannot also be auxiliary")
        expected = set(range(len(self.auxiliary_indices) + 1)) - {self.primary_index}
        if set(self.auxiliary_indices) != expected:
            raise ValueError("auxiliary_indices must be every index except the primary")
        return self

    @property
    def k(self) -> int:
        return len(self.auxiliary_indices) + 1


class AdaptiveWeights(VeilBaseModel):
    """
    Self-adaptive surrogate weights w_i = exp(softmax(rate)_i).

    Attributes:
        weights (list[float]): w_i, each in (1, e).

        rates (list[float]): Ratio of the last two epoch-mean losses per model.

        softmax (list[float]): softmax(rate), summing to 1.
    """

    weights: list[float]
    rates: list[float]
    softmax: list[float]

    @model_validator(mode="after")
    def check_bounds(self):
        if not (len(self.weights) == len(self.rates) == len(self.softmax)):
            raise ValueError("weights, rates and softmax must have equal length")
        if any(not 1.0 <= w <= math.e + WEIGHT_TOLERANCE for w in self.weights):
            raise ValueError(f"weights must lie in (1, e), got {self.weights}")
        return self

    @classmethod
    def uniform(cls, k: int) -> "AdaptiveWeights":
        s = 1.0 / k
        return cls(weights=[math.exp(s)] * k, rates=[1.0] * k, softmax=[s] * k)


class MetaStepConfig(VeilBaseModel):
    """
    Settings of one meta-auxiliary attack step.

    Attributes:
        inner_lr (float): Step size of the inner (meta-train) update.

        epsilon (float): Floor of the aggregate adversarial loss.

        second_order (bool): Differentiate through the inner update.

        meta_auxiliary (bool): False switches to the plain-ensemble loss.
    """

    inner_lr: float = Field(default=2e-5, gt=0.0)
    epsilon: float = Field(default=0.0, ge=0.0)
    second_order: bool = True
    meta_auxiliary: bool = True


@dataclass
class MetaBatchResult:
    """Outcome of one meta-auxiliary attack batch."""

    loss: torch.Tensor
    primary_losses: list[float]
    auxiliary_losses: list[float] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
