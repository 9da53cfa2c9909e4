from pathlib import Path
from typing import Optional

import torch
import torch.nn.functional as F
from torch.utils.data import Dataset

from veilface.data.image_io import load_image
from veilface.data.types import DatasetIndex, Split
from veilface.utils.exceptions import EmptySetError
from veilface.utils.seed import derive_seed, make_generator


class FaceDataset(Dataset):
    """
    Images of one split of a dataset index, as (image, attributes, identity)
    tuples with images in [-1, 1] and integer identity labels.
    """

    def __init__(
        self,
        index: DatasetIndex,
        split: Optional[Split] = Split.TRAIN,
        image_size: int = 32,
    ):
        self.index = index
        self.entries = index.split(split)
        if not self.entries:
            raise EmptySetError(f"Split `{split}` of the dataset is empty")
        self.image_size = image_size
        self.identity_names = sorted({e.identity for e in self.entries})
        lookup = {name: i for i, name in enumerate(self.identity_names)}
        self.identities = [lookup[e.identity] for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int):
        entry = self.entries[i]
        image = load_image(Path(self.index.root) / entry.file, self.image_size)
        attributes = torch.tensor(entry.attributes, dtype=torch.float32)
        return image, attributes, self.identities[i]

    @property
    def n_identities(self) -> int:
        return len(self.identity_names)

    def image_ids(self) -> list[str]:
        return [e.file for e in self.entries]


def _smooth(generator: torch.Generator, shape: tuple, size: int) -> torch.Tensor:
    coarse = torch.rand((1, *shape), generator=generator) * 2.0 - 1.0
    out = F.interpolate(coarse, size=(size, size), mode="bilinear", align_corners=False)
    return out[0]


class SyntheticFaceDataset(Dataset):
    """
    Deterministic toy faces for desk-scale runs.

    Every identity has a smooth base pattern; every image adds a small jitter,
    and each attribute bit brightens a fixed smooth region in a fixed colour.
    Identities are separable and attribute edits are visible, which is all the
    pipeline needs to be exercised end to end.

    Args:
        n_identities (int): Number of identities.

        images_per_identity (int): Images per identity.

        n_attributes (int): Attribute vector width.

        image_size (int): Square image size.

        seed (int): Generation seed.
    """

    def __init__(
        self,
        n_identities: int = 8,
        images_per_identity: int = 8,
        n_attributes: int = 13,
        image_size: int = 32,
        seed: int = 0,
    ):
        self.n_identities = n_identities
        self.n_attributes = n_attributes
        self.image_size = image_size
        self.seed = seed

        g = make_generator(derive_seed(seed, "attribute-masks"))
        masks = (_smooth(g, (n_attributes, 3, 3), image_size) + 1.0) / 2.0
        masks = masks**4
        colours = torch.rand((n_attributes, 3), generator=g) * 2.0 - 1.0

        images, attributes, identities = [], [], []
        for identity in range(n_identities):
            g = make_generator(derive_seed(seed, "identity", identity))
            base = 0.6 * _smooth(g, (3, 4, 4), image_size)
            for _ in range(images_per_identity):
                jitter = 0.08 * _smooth(g, (3, 8, 8), image_size)
                bits = (torch.rand(n_attributes, generator=g) < 0.5).float()
                edit = torch.einsum("a,ahw,ac->chw", bits, masks, colours) * 0.3
                images.append((base + jitter + edit).clamp(-0.95, 0.95))
                attributes.append(bits)
                identities.append(identity)
        self.images = torch.stack(images)
        self.attributes = torch.stack(attributes)
        self.identities = identities

    def __len__(self) -> int:
        return self.images.shape[0]

    def __getitem__(self, i: int):
        return self.images[i], self.attributes[i], self.identities[i]

    def image_ids(self) -> list[str]:
        return [f"{identity}_{i}" for i, identity in enumerate(self.identities)]
