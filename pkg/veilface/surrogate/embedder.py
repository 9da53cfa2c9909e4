import torch
from torch import nn

from veilface.surrogate.types import EmbedderConfig


def make_activation(name: str) -> nn.Module:
    activations = {
        "lrelu": lambda: nn.LeakyReLU(0.2),
        "elu": nn.ELU,
        "tanh": nn.Tanh,
        "relu": nn.ReLU,
    }
    if name not in activations:
        raise ValueError(f"Unknown activation `{name}`")
    return activations[name]()


class ToyEmbedder(nn.Module):
    """
    Small convolutional face embedder: stride-2 conv trunk, 2x2 average pool
    and a linear projection to d dimensions. Output is not normalized; see
    `SurrogateModel.embed`.
    """

    def __init__(self, config: EmbedderConfig):
        super().__init__()
        self.config = config
        layers: list[nn.Module] = []
        n_in = 3
        for n_out in config.channels:
            layers += [
                nn.Conv2d(n_in, n_out, kernel_size=3, stride=2, padding=1),
                make_activation(config.activation),
            ]
            n_in = n_out
        self.trunk = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(2)
        self.head = nn.Linear(n_in * 4, config.embedding_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.pool(self.trunk(x)).flatten(1))
