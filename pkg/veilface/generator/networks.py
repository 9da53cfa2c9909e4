from typing import Optional

import torch
from torch import nn

from veilface.generator.types import FeaturePyramid, GeneratorConfig
from veilface.surrogate.embedder import make_activation
from veilface.utils.tensor import ensure_attributes, ensure_image_batch


def tile_attributes(att: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    n, _, h, w = like.shape
    return att.to(like.dtype).view(n, -1, 1, 1).expand(n, att.shape[-1], h, w)


def inject(clean: torch.Tensor, adv: torch.Tensor, gamma: float) -> torch.Tensor:
    """Decoder-side clean-domain injection: gamma * clean + (1 - gamma) * adv."""
    return gamma * clean + (1.0 - gamma) * adv


class Encoder(nn.Module):
    """Stride-2 convolutional encoder returning every layer's output."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        layers = []
        n_in = 3
        for n_out in config.enc_channels:
            layers.append(
                nn.Sequential(
                    nn.Conv2d(
                        n_in,
                        n_out,
                        config.kernel_size,
                        stride=2,
                        padding=config.padding,
                    ),
                    make_activation(config.enc_activation),
                )
            )
            n_in = n_out
        self.layers = nn.ModuleList(layers)

    def forward(self, x: torch.Tensor) -> FeaturePyramid:
        x = ensure_image_batch(x, self.config.image_size)
        features = []
        for layer in self.layers:
            x = layer(x)
            features.append(x)
        return FeaturePyramid(features)


class Decoder(nn.Module):
    """
    Mirrored transposed-conv decoder. The attribute vector is tiled and
    concatenated to every layer's input; the first `shortcut_layers` outputs
    are concatenated with the matching encoder features.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        enc = config.enc_channels
        depth = config.depth
        layers = []
        n_in = enc[-1]
        for i in range(depth):
            last = i == depth - 1
            n_out = 3 if last else enc[depth - 2 - i]
            layers.append(
                nn.Sequential(
                    nn.ConvTranspose2d(
                        n_in + config.n_attributes,
                        n_out,
                        config.kernel_size,
                        stride=2,
                        padding=config.padding,
                    ),
                    nn.Tanh() if last else make_activation(config.dec_activation),
                )
            )
            n_in = n_out * 2 if self._has_shortcut(i) else n_out
        self.layers = nn.ModuleList(layers)

    def _has_shortcut(self, i: int) -> bool:
        return i < self.config.shortcut_layers and i < self.config.depth - 1

    def forward(
        self,
        z: FeaturePyramid,
        att: torch.Tensor,
        clean: Optional[FeaturePyramid] = None,
        gamma: float = 0.0,
    ) -> torch.Tensor:
        """
        Decodes a pyramid under an attribute condition.

        When `clean` is given, a parallel clean branch is decoded in lockstep and
        injected after every layer with weight `gamma`.

        Args:
            z (FeaturePyramid): Pyramid driving the main branch.

            att (torch.Tensor): (N, n) attribute condition (may be real-valued).

            clean (FeaturePyramid, optional): Pyramid of the clean branch.

            gamma (float): Injection weight in [0, 1].

        Returns:
            torch.Tensor: (N, 3, H, W) images in [-1, 1].
        """
        h = z[-1]
        h_clean = clean[-1] if clean is not None else None
        for i, layer in enumerate(self.layers):
            h = layer(torch.cat([h, tile_attributes(att, h)], dim=1))
            if h_clean is not None:
                h_clean = layer(
                    torch.cat([h_clean, tile_attributes(att, h_clean)], dim=1)
                )
                h = inject(h_clean, h, gamma)
            if self._has_shortcut(i):
                h = torch.cat([h, z[-(i + 2)]], dim=1)
                if h_clean is not None:
                    h_clean = torch.cat([h_clean, clean[-(i + 2)]], dim=1)
        return h


class Generator(nn.Module):
    """Attribute-conditional encoder/decoder generator G = (G_enc, G_dec)."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        self.encoder = Encoder(config)
        self.decoder = Decoder(config)

    def encode(self, x: torch.Tensor) -> FeaturePyramid:
        return self.encoder(x)

    def decode(self, z: FeaturePyramid, att: torch.Tensor) -> torch.Tensor:
        att = ensure_attributes(att, self.config.n_attributes)
        return self.decoder(z, att)

    def forward(self, x: torch.Tensor, att: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(x), att)

    def snapshot(self) -> dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.state_dict().items()}

    def restore(self, snapshot: dict[str, torch.Tensor]) -> None:
        self.load_state_dict(snapshot)


class Discriminator(nn.Module):
    """
    Shared convolutional trunk with a real/fake head D_G and an attribute head D_att.
    Both heads return logits; `probabilities` squashes them into (0, 1).
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        layers: list[nn.Module] = []
        n_in = 3
        for n_out in config.dis_channels:
            layers += [
                nn.Conv2d(n_in, n_out, 4, stride=2, padding=1),
                nn.LeakyReLU(0.2),
            ]
            n_in = n_out
        self.trunk = nn.Sequential(*layers)
        side = config.image_size // 2 ** len(config.dis_channels)
        features = n_in * side * side
        self.head_real_fake = nn.Linear(features, 1)
        self.head_attr = nn.Linear(features, config.n_attributes)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = ensure_image_batch(x, self.config.image_size)
        h = self.trunk(x).flatten(1)
        return self.head_real_fake(h).squeeze(-1), self.head_attr(h)

    def probabilities(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        logit_rf, logit_att = self(x)
        return torch.sigmoid(logit_rf), torch.sigmoid(logit_att)
