from veilface.generator.losses import *
from veilface.generator.networks import *
from veilface.generator.types import *

__all__ = [
    "GeneratorConfig",
    "FeaturePyramid",
    "Encoder",
    "Decoder",
    "Generator",
    "Discriminator",
    "tile_attributes",
    "inject",
    "PROB_EPS",
    "clamp_probability",
    "discriminator_loss",
    "generator_adversarial_loss",
    "attribute_bce",
    "gan_losses",
    "attribute_losses",
    "reconstruction_loss",
]
