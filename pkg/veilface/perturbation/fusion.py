import copy
from collections import OrderedDict
from typing import Optional

import torch
from torch.func import functional_call

from veilface.generator.networks import Encoder, Generator
from veilface.generator.types import FeaturePyramid
from veilface.perturbation.types import FusionConfig
from veilface.utils.exceptions import MissingComponentError
from veilface.utils.tensor import ensure_attributes


def init_perturbation_encoder(generator: Generator) -> Encoder:
    """
    Creates E_adv as a trainable, bitwise copy of the generator's encoder.

    Args:
        generator (Generator): Trained generator whose encoder is copied.

    Returns:
        Encoder: The perturbation encoder.
    """
    encoder = copy.deepcopy(generator.encoder)
    for p in encoder.parameters():
        p.requires_grad_(True)
    return encoder


def encoder_params(encoder: Encoder) -> "OrderedDict[str, torch.Tensor]":
    return OrderedDict(encoder.named_parameters())


def fuse_features(
    ft: FeaturePyramid, perb: FeaturePyramid, beta: float
) -> FeaturePyramid:
    """
    Layerwise convex combination fs_i = beta * ft_i + (1 - beta) * perb_i.

    Args:
        ft (FeaturePyramid): Clean encoder features.

        perb (FeaturePyramid): Perturbation encoder features.

        beta (float): Weight in [0, 1].

    Returns:
        FeaturePyramid: The fused pyramid.

    Raises:
        DimensionMismatchError: If the pyramids are not layer-shape compatible.
        ValueError: If beta is outside [0, 1].
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    ft.check_compatible(perb)
    return FeaturePyramid(
        [beta * a + (1.0 - beta) * b for a, b in zip(ft.layers, perb.layers)]
    )


def perturbation_features(
    perturb_encoder: Encoder,
    x_cov: torch.Tensor,
    params: Optional["OrderedDict[str, torch.Tensor]"] = None,
) -> FeaturePyramid:
    if params is None:
        return perturb_encoder(x_cov)
    return functional_call(perturb_encoder, params, (x_cov,))


def generate_protected(
    x_cov: torch.Tensor,
    att_b: torch.Tensor,
    cfg: FusionConfig,
    generator: Generator,
    perturb_encoder: Optional[Encoder],
    params: Optional["OrderedDict[str, torch.Tensor]"] = None,
) -> torch.Tensor:
    """
    Generates protected faces from clean faces and a target attribute vector.

    G_enc and E_adv both encode `x_cov`; their pyramids are fused layer by layer
    with weight beta and decoded under `att_b`. A clean branch decoding
    (G_enc(x_cov), att_b) runs in lockstep and is injected after every decoder
    layer with weight gamma.

    Args:
        x_cov (torch.Tensor): Clean faces in [-1, 1].

        att_b (torch.Tensor): Target attributes, (n,) or (N, n).

        cfg (FusionConfig): beta / gamma weights.

        generator (Generator): Frozen G_enc / G_dec.

        perturb_encoder (Encoder): E_adv.

        params (OrderedDict, optional): Substitute parameters for E_adv, used by
            the meta-attack inner step.

    Returns:
        torch.Tensor: Protected faces x_adv in [-1, 1].

    Raises:
        MissingComponentError: If `perturb_encoder` is None.
        ValueError: If beta or gamma is outside [0, 1].
    """
    if perturb_encoder is None:
        raise MissingComponentError("Perturbation encoder E_adv is not initialized")
    if not (0.0 <= cfg.beta <= 1.0 and 0.0 <= cfg.gamma <= 1.0):
        raise ValueError(
            f"beta and gamma must lie in [0, 1], got {cfg.beta}, {cfg.gamma}"
        )
    att_b = ensure_attributes(att_b, generator.config.n_attributes)
    clean = generator.encode(x_cov)
    fused = fuse_features(
        clean, perturbation_features(perturb_encoder, x_cov, params), cfg.beta
    )
    if att_b.shape[0] == 1 and x_cov.dim() == 4 and x_cov.shape[0] > 1:
        att_b = att_b.expand(x_cov.shape[0], -1)
    return generator.decoder(fused, att_b, clean=clean, gamma=cfg.gamma)


def attribute_edit(
    generator: Generator, x_cov: torch.Tensor, att_b: torch.Tensor
) -> torch.Tensor:
    """Plain attribute-modified image x_cov^{att_b} = G_dec(G_enc(x_cov), att_b)."""
    att_b = ensure_attributes(att_b, generator.config.n_attributes)
    if att_b.shape[0] == 1 and x_cov.dim() == 4 and x_cov.shape[0] > 1:
        att_b = att_b.expand(x_cov.shape[0], -1)
    return generator.decoder(generator.encode(x_cov), att_b)


class SemanticProtector:
    """
    Binds a frozen generator, E_adv and fusion weights, so callers can produce
    protected faces under either E_adv's live parameters or substitutes.
    """

    def __init__(
        self, generator: Generator, perturb_encoder: Encoder, cfg: FusionConfig
    ):
        self.generator = generator
        self.perturb_encoder = perturb_encoder
        self.cfg = cfg

    def params(self) -> "OrderedDict[str, torch.Tensor]":
        return encoder_params(self.perturb_encoder)

    def protect(
        self,
        x_cov: torch.Tensor,
        att_b: torch.Tensor,
        params: Optional["OrderedDict[str, torch.Tensor]"] = None,
    ) -> torch.Tensor:
        return generate_protected(
            x_cov, att_b, self.cfg, self.generator, self.perturb_encoder, params
        )

    def reference(self, x_cov: torch.Tensor, att_b: torch.Tensor) -> torch.Tensor:
        return attribute_edit(self.generator, x_cov, att_b)
