import pytest
import torch
from torch.utils.data import Subset

from veilface.data.datasets import SyntheticFaceDataset
from veilface.surrogate.calibrate import make_verification_pairs
from veilface.surrogate.model import cosine_similarity, embed
from veilface.surrogate.train import dataset_labels, train_toy_embedder
from veilface.utils.exceptions import InsufficientDataError


def test_train_toy_embedder_is_seeded(dataset, embedder_config):
    a = train_toy_embedder(dataset, 4, epochs=1, config=embedder_config, seed=3)
    b = train_toy_embedder(dataset, 4, epochs=1, config=embedder_config, seed=3)
    for p, q in zip(a.network.parameters(), b.network.parameters()):
        assert torch.equal(p, q)
    assert a.image_size == embedder_config.image_size


def test_train_toy_embedder_needs_identities(dataset, embedder_config):
    single = Subset(dataset, [0, 1, 2, 3])
    assert dataset_labels(single) == [0, 0, 0, 0]
    with pytest.raises(InsufficientDataError):
        train_toy_embedder(single, 4, epochs=1, config=embedder_config)


def test_trained_embedder_separates_identities(embedder_config):
    faces = SyntheticFaceDataset(
        n_identities=8, images_per_identity=20, n_attributes=3, image_size=16, seed=0
    )
    train = [i for i in range(len(faces)) if i % 20 < 16]
    held_out = [i for i in range(len(faces)) if i % 20 >= 16]
    model = train_toy_embedder(
        Subset(faces, train), 8, epochs=10, config=embedder_config, seed=0, lr=5e-3
    )

    labels = [faces.identities[i] for i in held_out]
    genuine, impostor = make_verification_pairs(labels)
    with torch.no_grad():
        e = embed(model, faces.images[held_out])
    sims = cosine_similarity(e.unsqueeze(1), e.unsqueeze(0))
    genuine_mean = torch.stack([sims[i, j] for i, j in genuine]).mean()
    impostor_mean = torch.stack([sims[i, j] for i, j in impostor]).mean()
    assert genuine_mean - impostor_mean > 0
