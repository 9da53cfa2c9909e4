import logging
from collections import Counter
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn
from torch.utils.data import DataLoader, Dataset
from tqdm import tqdm

from veilface.surrogate.embedder import ToyEmbedder
from veilface.surrogate.model import SurrogateModel
from veilface.surrogate.types import EmbedderConfig, SurrogateRole
from veilface.utils.exceptions import InsufficientDataError
from veilface.utils.seed import make_generator

logger = logging.getLogger(__name__)


class CosineMarginHead(nn.Module):
    """Additive cosine margin classifier over normalized class weights."""

    def __init__(
        self,
        embedding_dim: int,
        identities: int,
        margin: float = 0.35,
        scale: float = 16.0,
    ):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(identities, embedding_dim) * 0.01)
        self.margin = margin
        self.scale = scale

    def forward(self, embeddings: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        cosine = F.linear(
            F.normalize(embeddings, dim=-1), F.normalize(self.weight, dim=-1)
        )
        margin = F.one_hot(labels, cosine.shape[1]).to(cosine.dtype) * self.margin
        return F.cross_entropy(self.scale * (cosine - margin), labels)


def dataset_labels(dataset: Dataset) -> list[int]:
    labels = getattr(dataset, "identities", None)
    if labels is None:
        labels = [int(dataset[i][2]) for i in range(len(dataset))]
    return list(labels)


def train_toy_embedder(
    dataset: Dataset,
    identities: int,
    epochs: int,
    config: Optional[EmbedderConfig] = None,
    id: str = "toy",
    role: SurrogateRole = SurrogateRole.WHITE_BOX_TRAIN,
    seed: int = 0,
    lr: float = 1e-3,
    batch_size: int = 32,
) -> SurrogateModel:
    """
    Trains a toy face embedder with an additive cosine margin identity loss.

    Args:
        dataset (Dataset): Yields (image, attributes, identity) tuples.

        identities (int): Number of identity classes; labels are 0..identities-1.

        epochs (int): Training epochs. 0 returns the seeded random initialization.

        config (EmbedderConfig, optional): Architecture; defaults to `EmbedderConfig()`.

        id (str): Identifier of the resulting surrogate.

        role (SurrogateRole): Role of the resulting surrogate.

        seed (int): Seed for initialization and shuffling.

        lr (float): Adam learning rate.

        batch_size (int): Mini-batch size.

    Returns:
        SurrogateModel: The trained model, in inference mode.

    Raises:
        InsufficientDataError: If fewer than two identities have at least two images.
    """
    config = config or EmbedderConfig()
    counts = Counter(dataset_labels(dataset))
    if sum(1 for c in counts.values() if c >= 2) < 2:
        raise InsufficientDataError(
            "Need at least 2 identities with at least 2 images each"
        )

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        network = ToyEmbedder(config)
        head = CosineMarginHead(config.embedding_dim, identities)

    if epochs > 0:
        optimizer = torch.optim.Adam(
            list(network.parameters()) + list(head.parameters()), lr=lr
        )
        loader = DataLoader(
            dataset,
            batch_size=batch_size,
            shuffle=True,
            generator=make_generator(seed),
        )
        network.train()
        for epoch in tqdm(range(epochs), desc=f"embedder {id}", leave=False):
            total = 0.0
            for images, _, labels in loader:
                optimizer.zero_grad()
                loss = head(network(images), labels.long())
                loss.backward()
                optimizer.step()
                total += loss.item()
            logger.debug(f"embedder {id} epoch {epoch}: loss={total / len(loader):.4f}")

    return SurrogateModel(
        id=id, network=network, image_size=config.image_size, role=role
    )
