from dataclasses import dataclass
from typing import Iterator

import torch
from pydantic import Field, model_validator

from veilface.utils.exceptions import DimensionMismatchError
from veilface.utils.model import VeilBaseModel


class GeneratorConfig(VeilBaseModel):
    """
    Architecture of the attribute-conditional generator and its discriminator.

    Attributes:
        image_size (int): Square input size; must be divisible by
            2 ** len(enc_channels).

        n_attributes (int): Width n of attribute vectors.

        enc_channels (list[int]): Output channels of each stride-2 encoder layer;
            the pyramid depth L is its length. The decoder mirrors it.

        kernel_size (int): 4 (padding 1) or 2 (padding 0); both halve the size.

        shortcut_layers (int): Decoder layers followed by a skip connection from
            the matching encoder layer.

        enc_activation (str): Encoder activation.

        dec_activation (str): Decoder activation (the last layer is always tanh).

        dis_channels (list[int]): Discriminator trunk channels.
    """

    image_size: int = 32
    n_attributes: int = 13
    enc_channels: list[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    kernel_size: int = 4
    shortcut_layers: int = 1
    enc_activation: str = "lrelu"
    dec_activation: str = "relu"
    dis_channels: list[int] = Field(default_factory=lambda: [16, 32, 64, 128])

    @model_validator(mode="after")
    def check_geometry(self):
        depth = len(self.enc_channels)
        if depth < 2:
            raise ValueError("the encoder needs at least 2 layers")
        if self.image_size % (2**depth) != 0:
            raise ValueError(
                f"image_size {self.image_size} is not divisible by 2**{depth}"
            )
        if self.image_size % (2 ** len(self.dis_channels)) != 0:
            raise ValueError("image_size is not divisible by the discriminator stride")
        if self.kernel_size not in (2, 4):
            raise ValueError("kernel_size must be 2 or 4")
        if not 0 <= self.shortcut_layers < depth:
            raise ValueError(f"shortcut_layers must lie in [0, {depth - 1}]")
        if self.n_attributes < 1:
            raise ValueError("n_attributes must be positive")
        return self

    @property
    def depth(self) -> int:
        return len(self.enc_channels)

    @property
    def padding(self) -> int:
        return (self.kernel_size - 2) // 2


@dataclass
class FeaturePyramid:
    """
    Ordered per-layer encoder feature maps, shallowest first (decreasing size).
    """

    layers: list[torch.Tensor]

    def __len__(self) -> int:
        return len(self.layers)

    def __iter__(self) -> Iterator[torch.Tensor]:
        return iter(self.layers)

    def __getitem__(self, index: int) -> torch.Tensor:
        return self.layers[index]

    def check_compatible(self, other: "FeaturePyramid") -> None:
        if len(self) != len(other):
            raise DimensionMismatchError(
                f"Pyramid depths differ: {len(self)} vs {len(other)}"
            )
        for i, (a, b) in enumerate(zip(self.layers, other.layers)):
            if a.shape != b.shape:
                raise DimensionMismatchError(
                    f"Layer {i} shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}"
                )
