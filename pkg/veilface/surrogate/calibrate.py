import logging
import math
from collections import Counter
from typing import Optional, Sequence

import torch

from veilface.surrogate.model import SurrogateModel, cosine_similarity, embed
from veilface.surrogate.types import TAU_FLOOR, CalibrationResult
from veilface.utils.exceptions import EmptySetError

logger = logging.getLogger(__name__)

# Threshold convention for attack success (tau_1) and erasion success (tau_2).
FAR_ATTACK = 0.01
FAR_ERASION = 0.1

Pairs = tuple[torch.Tensor, torch.Tensor]


def acceptance_rate(similarities: torch.Tensor, tau: float) -> float:
    """Fraction of pairs with similarity strictly above `tau`."""
    if similarities.numel() == 0:
        raise EmptySetError("No similarities given")
    return (similarities.double() > tau).double().mean().item()


def threshold_at_far(similarities: torch.Tensor, far_target: float) -> float:
    """
    Smallest threshold whose impostor acceptance rate does not exceed `far_target`.

    Acceptance is strict (`similarity > tau`). When every impostor may be
    accepted, the threshold sits one ulp below the smallest similarity. Ties
    resolve to the stricter threshold.

    Args:
        similarities (torch.Tensor): Impostor-pair similarities.

        far_target (float): Target false acceptance rate in (0, 1].

    Returns:
        float: The calibrated threshold.

    Raises:
        EmptySetError: If there are no impostor similarities.
        ValueError: If far_target is outside (0, 1].
    """
    if not 0.0 < far_target <= 1.0:
        raise ValueError(f"far_target must lie in (0, 1], got {far_target}")
    sims = similarities.detach().flatten().double()
    n = sims.numel()
    if n == 0:
        raise EmptySetError("Impostor pair set is empty")
    ordered = torch.sort(sims).values
    allowed = min(n, math.floor(far_target * n + 1e-9))
    if allowed == n:
        return math.nextafter(ordered[0].item(), -math.inf)
    return ordered[n - allowed - 1].item()


def make_verification_pairs(
    labels: Sequence[int],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """
    Enumerates genuine and impostor index pairs (i < j) in a fixed order.

    Identities with a single image take part in no pair.

    Args:
        labels (Sequence[int]): Identity label of each image.

    Returns:
        tuple: (genuine_pairs, impostor_pairs) as lists of index tuples.
    """
    counts = Counter(labels)
    eligible = [i for i, label in enumerate(labels) if counts[label] >= 2]
    genuine, impostor = [], []
    for a, i in enumerate(eligible):
        for j in eligible[a + 1 :]:
            (genuine if labels[i] == labels[j] else impostor).append((i, j))
    return genuine, impostor


@torch.no_grad()
def pair_similarities(
    model: SurrogateModel, pairs: Pairs, batch_size: int = 256
) -> torch.Tensor:
    left, right = pairs
    sims = []
    for start in range(0, left.shape[0], batch_size):
        a = embed(model, left[start : start + batch_size])
        b = embed(model, right[start : start + batch_size])
        sims.append(cosine_similarity(a, b))
    if not sims:
        raise EmptySetError("Pair set is empty")
    return torch.cat(sims)


def calibrate_threshold(
    model: SurrogateModel,
    genuine_pairs: Optional[Pairs],
    impostor_pairs: Pairs,
    far_target: float,
    target: str = "attack",
) -> CalibrationResult:
    """
    Calibrates a decision threshold at a false acceptance rate and stores it on
    the model.

    Args:
        model (SurrogateModel): The model to calibrate.

        genuine_pairs (Pairs, optional): Same-identity image pairs, used to report TAR.

        impostor_pairs (Pairs): Different-identity image pairs (left, right batches).

        far_target (float): Target FAR in (0, 1]; 0.01 for attack, 0.1 for erasion.

        target (str): "attack" stores tau_attack, "erasion" stores tau_erasion.

    Returns:
        CalibrationResult: Threshold, achieved FAR and TAR.
    """
    impostor = pair_similarities(model, impostor_pairs)
    tau = max(TAU_FLOOR, min(1.0, threshold_at_far(impostor, far_target)))
    tar = None
    if genuine_pairs is not None and genuine_pairs[0].shape[0] > 0:
        tar = acceptance_rate(pair_similarities(model, genuine_pairs), tau)
    result = CalibrationResult(
        far_target=far_target, tau=tau, far=acceptance_rate(impostor, tau), tar=tar
    )
    if target == "attack":
        model.tau_attack = tau
    elif target == "erasion":
        model.tau_erasion = tau
    else:
        raise ValueError(f"Unknown threshold target `{target}`")
    logger.info(
        f"calibrated {model.id} {target} threshold: tau={tau:.4f} "
        f"far={result.far:.4f} tar={tar}"
    )
    return result
