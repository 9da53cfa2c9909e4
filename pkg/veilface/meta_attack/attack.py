import logging
from collections import OrderedDict
from typing import Callable, Optional, Sequence, Union

import torch

from veilface.meta_attack.types import (
    RATE_GUARD,
    AdaptiveWeights,
    MetaBatchResult,
    MetaStepConfig,
    TaskSplit,
)
from veilface.perturbation.fusion import SemanticProtector
from veilface.surrogate.model import (
    SurrogateEnsemble,
    SurrogateModel,
    cosine_similarity,
    embed,
)
from veilface.surrogate.types import LossHistory
from veilface.utils.exceptions import DimensionMismatchError, InsufficientDataError

logger = logging.getLogger(__name__)

Corruption = Callable[[torch.Tensor], torch.Tensor]
Scalar = Union[float, torch.Tensor]


def _as_loss(value: Scalar) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value
    return torch.tensor(float(value), dtype=torch.float64)


def task_splits(k: int) -> list[TaskSplit]:
    """Every model takes one turn as primary; the rest are auxiliary."""
    return [
        TaskSplit(primary_index=p, auxiliary_indices=[i for i in range(k) if i != p])
        for p in range(k)
    ]


def primary_loss(
    model: SurrogateModel, x_adv: torch.Tensor, x_target: torch.Tensor
) -> torch.Tensor:
    """
    Impersonation loss 1 - cos(FR(x_target), FR(x_adv)), averaged over the batch.

    Args:
        model (SurrogateModel): Surrogate face-embedding model.

        x_adv (torch.Tensor): Protected faces.

        x_target (torch.Tensor): Target face, broadcast over the batch.

    Returns:
        torch.Tensor: Scalar in [0, 2].
    """
    return (1.0 - cosine_similarity(embed(model, x_target), embed(model, x_adv))).mean()


def inner_update(
    params: "OrderedDict[str, torch.Tensor]",
    grads: Sequence[Optional[torch.Tensor]],
    inner_lr: float,
) -> "OrderedDict[str, torch.Tensor]":
    """
    One plain gradient-descent step theta' = theta - lr * grad.

    The input parameters are left untouched; missing gradients count as zero.

    Args:
        params (OrderedDict): theta_E.

        grads (Sequence[torch.Tensor]): Gradients aligned with `params`.

        inner_lr (float): Step size.

    Returns:
        OrderedDict: theta_E'.

    Raises:
        DimensionMismatchError: If counts or shapes do not match.
    """
    if len(grads) != len(params):
        raise DimensionMismatchError(
            f"Got {len(grads)} gradients for {len(params)} parameters"
        )
    out = OrderedDict()
    for (name, param), grad in zip(params.items(), grads):
        if grad is None:
            out[name] = param
            continue
        if grad.shape != param.shape:
            raise DimensionMismatchError(
                f"Gradient shape {tuple(grad.shape)} does not match `{name}` "
                f"{tuple(param.shape)}"
            )
        out[name] = param - inner_lr * grad
    return out


def inner_step(
    params: "OrderedDict[str, torch.Tensor]",
    loss: torch.Tensor,
    inner_lr: float,
    second_order: bool = True,
) -> "OrderedDict[str, torch.Tensor]":
    """Meta-train step on the primary loss; keeps the graph when second order."""
    grads = torch.autograd.grad(
        loss,
        list(params.values()),
        create_graph=second_order,
        retain_graph=True,
        allow_unused=True,
    )
    return inner_update(params, grads, inner_lr)


def weighted_auxiliary(
    split: TaskSplit, aux_terms: Sequence[Scalar], weights: AdaptiveWeights
) -> torch.Tensor:
    """
    sum_{i != primary} w_i * term_i / (K - 1).

    Args:
        split (TaskSplit): The current split.

        aux_terms (Sequence): 1 - cos terms aligned with `split.auxiliary_indices`.

        weights (AdaptiveWeights): Weights for all K models; the primary's is unused.

    Returns:
        torch.Tensor: The auxiliary loss.
    """
    if split.k < 2:
        raise InsufficientDataError("A split needs at least one auxiliary model")
    if len(aux_terms) != len(split.auxiliary_indices):
        raise DimensionMismatchError("One auxiliary term per auxiliary model expected")
    if len(weights.weights) != split.k:
        raise DimensionMismatchError("Weights must cover every model")
    total = sum(
        weights.weights[i] * _as_loss(term)
        for i, term in zip(split.auxiliary_indices, aux_terms)
    )
    return total / (split.k - 1)


def auxiliary_loss(
    split: TaskSplit,
    ensemble: SurrogateEnsemble,
    protector: SemanticProtector,
    x_cov: torch.Tensor,
    att_b: torch.Tensor,
    theta_prime: "OrderedDict[str, torch.Tensor]",
    weights: AdaptiveWeights,
    x_target: torch.Tensor,
    corrupt: Optional[Corruption] = None,
) -> torch.Tensor:
    """
    Meta-test loss: regenerate the protected faces with the inner-updated E_adv
    and score them on every auxiliary surrogate.

    Args:
        split (TaskSplit): Primary/auxiliary split.

        ensemble (SurrogateEnsemble): White-box surrogates.

        protector (SemanticProtector): Frozen generator plus E_adv.

        x_cov (torch.Tensor): Clean faces.

        att_b (torch.Tensor): Target attributes.

        theta_prime (OrderedDict): Inner-updated E_adv parameters.

        weights (AdaptiveWeights): Current surrogate weights.

        x_target (torch.Tensor): Target face.

        corrupt (Callable, optional): Noise applied to the regenerated faces.

    Returns:
        torch.Tensor: Non-negative auxiliary loss.
    """
    if len(ensemble) < 2:
        raise InsufficientDataError("The auxiliary loss needs K >= 2")
    x_adv_prime = protector.protect(x_cov, att_b, theta_prime)
    if corrupt is not None:
        x_adv_prime = corrupt(x_adv_prime)
    terms = [
        primary_loss(ensemble[i], x_adv_prime, x_target)
        for i in split.auxiliary_indices
    ]
    return weighted_auxiliary(split, terms, weights)


def adaptive_weights(history: LossHistory) -> AdaptiveWeights:
    """
    Self-adaptive weights from the last two epoch-mean losses.

    rate_i = mean_{t-1} / mean_{t-2} (1 when the denominator is below 1e-8) and
    w_i = exp(softmax(rate)_i).

    Args:
        history (LossHistory): Per-model epoch means.

    Returns:
        AdaptiveWeights: Weights, rates and the softmax.
    """
    prev = torch.tensor(history.previous, dtype=torch.float64)
    before = torch.tensor(history.before_previous, dtype=torch.float64)
    guarded = before.abs() < RATE_GUARD
    safe_before = torch.where(guarded, torch.ones_like(before), before)
    rates = torch.where(guarded, torch.ones_like(prev), prev / safe_before)
    soft = torch.softmax(rates, dim=0)
    return AdaptiveWeights(
        weights=torch.exp(soft).tolist(), rates=rates.tolist(), softmax=soft.tolist()
    )


def adversarial_loss(
    pri_losses: Sequence[Scalar], aux_losses: Sequence[Scalar], epsilon: float
) -> torch.Tensor:
    """
    Aggregate loss max((1 / 2K) * sum_i (pri_i + aux_i), epsilon).

    Args:
        pri_losses (Sequence): K primary losses.

        aux_losses (Sequence): K auxiliary losses.

        epsilon (float): Floor; the result is exactly epsilon below it.

    Returns:
        torch.Tensor: Scalar >= epsilon.

    Raises:
        DimensionMismatchError: If the lists differ in length.
    """
    if len(pri_losses) != len(aux_losses) or len(pri_losses) == 0:
        raise DimensionMismatchError(
            f"Expected K primary and K auxiliary losses, got {len(pri_losses)} "
            f"and {len(aux_losses)}"
        )
    k = len(pri_losses)
    total = sum(
        _as_loss(p) + _as_loss(a) for p, a in zip(pri_losses, aux_losses)
    )
    mean = total / (2 * k)
    floor = torch.full_like(mean, epsilon)
    return torch.where(mean > floor, mean, floor)


def ensemble_adversarial_loss(
    pri_losses: Sequence[Scalar], epsilon: float
) -> torch.Tensor:
    """Plain-ensemble ablation: max(mean_i pri_i, epsilon)."""
    if len(pri_losses) == 0:
        raise DimensionMismatchError("Expected at least one primary loss")
    mean = sum(_as_loss(p) for p in pri_losses) / len(pri_losses)
    floor = torch.full_like(mean, epsilon)
    return torch.where(mean > floor, mean, floor)


def meta_adversarial_loss(
    ensemble: SurrogateEnsemble,
    protector: SemanticProtector,
    x_cov: torch.Tensor,
    att_b: torch.Tensor,
    x_target: torch.Tensor,
    cfg: MetaStepConfig,
    weights: Optional[AdaptiveWeights] = None,
    corrupt: Optional[Corruption] = None,
    params: Optional["OrderedDict[str, torch.Tensor]"] = None,
    x_adv: Optional[torch.Tensor] = None,
) -> MetaBatchResult:
    """
    Builds the adversarial loss of one batch without stepping any optimizer.

    The protected faces are generated once; then every surrogate takes a turn as
    primary: its loss drives an inner update of E_adv, the faces are regenerated
    with the updated parameters and scored on the auxiliaries.

    Args:
        ensemble (SurrogateEnsemble): K >= 2 white-box surrogates.

        protector (SemanticProtector): Frozen generator plus E_adv.

        x_cov (torch.Tensor): Clean faces.

        att_b (torch.Tensor): Target attributes.

        x_target (torch.Tensor): Target face.

        cfg (MetaStepConfig): Inner step size, floor and order.

        weights (AdaptiveWeights, optional): Defaults to the ensemble history's weights.

        corrupt (Callable, optional): Noise applied to every generated face.

        params (OrderedDict, optional): E_adv parameters; defaults to the live ones.

        x_adv (torch.Tensor, optional): Already generated (uncorrupted) faces for
            `params`, to avoid generating them twice.

    Returns:
        MetaBatchResult: The loss (with graph) and per-model diagnostics.
    """
    k = len(ensemble)
    if k < 2:
        raise InsufficientDataError(f"The meta-auxiliary attack needs K >= 2, got {k}")
    params = params if params is not None else protector.params()
    weights = weights or adaptive_weights(ensemble.history)
    if x_adv is None:
        x_adv = protector.protect(x_cov, att_b, params)
    if corrupt is not None:
        x_adv = corrupt(x_adv)

    pri = [primary_loss(model, x_adv, x_target) for model in ensemble]
    if not cfg.meta_auxiliary:
        return MetaBatchResult(
            loss=ensemble_adversarial_loss(pri, cfg.epsilon),
            primary_losses=[p.item() for p in pri],
            weights=list(weights.weights),
        )

    aux = []
    for split in task_splits(k):
        theta_prime = inner_step(
            params, pri[split.primary_index], cfg.inner_lr, cfg.second_order
        )
        aux.append(
            auxiliary_loss(
                split,
                ensemble,
                protector,
                x_cov,
                att_b,
                theta_prime,
                weights,
                x_target,
                corrupt,
            )
        )
    return MetaBatchResult(
        loss=adversarial_loss(pri, aux, cfg.epsilon),
        primary_losses=[p.item() for p in pri],
        auxiliary_losses=[a.item() for a in aux],
        weights=list(weights.weights),
    )


def run_meta_batch(
    ensemble: SurrogateEnsemble,
    protector: SemanticProtector,
    optimizer: torch.optim.Optimizer,
    x_cov: torch.Tensor,
    att_b: torch.Tensor,
    x_target: torch.Tensor,
    cfg: MetaStepConfig,
    weights: Optional[AdaptiveWeights] = None,
    corrupt: Optional[Corruption] = None,
) -> MetaBatchResult:
    """
    One full meta-auxiliary attack batch: build the loss, then apply exactly one
    outer optimizer step. The optimizer must only hold E_adv's parameters; the
    generator is never updated. Primary losses are recorded into the ensemble's
    loss history.

    Returns:
        MetaBatchResult: The detached batch outcome.
    """
    optimizer.zero_grad()
    result = meta_adversarial_loss(
        ensemble, protector, x_cov, att_b, x_target, cfg, weights, corrupt
    )
    result.loss.backward()
    optimizer.step()
    for i, loss in enumerate(result.primary_losses):
        ensemble.history.record(i, loss)
    result.loss = result.loss.detach()
    return result
