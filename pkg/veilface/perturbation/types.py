from pydantic import Field

from veilface.utils.model import VeilBaseModel

DEFAULT_SIGMA1 = 30.0


class FusionConfig(VeilBaseModel):
    """
    Weights of the semantic perturbation.

    Attributes:
        beta (float): Encoder-side weight of the clean features in each fused layer.

        gamma (float): Decoder-side weight of the clean branch at each injection.

        sigma1 (float): Floor of the perturbation loss (unreduced L2 per image).
    """

    beta: float = Field(default=0.5, ge=0.0, le=1.0)
    gamma: float = Field(default=0.3, ge=0.0, le=1.0)
    sigma1: float = Field(default=DEFAULT_SIGMA1, gt=0.0)
