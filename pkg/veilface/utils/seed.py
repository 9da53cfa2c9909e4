import hashlib
import random

import numpy as np
import torch


def derive_seed(seed: int, *parts) -> int:
    """
    Derives a child seed from a base seed and any number of labels.

    The derivation is a hash, so (seed, stage, epoch, batch) tuples give
    independent, reproducible streams regardless of call order.

    Args:
        seed (int): Base experiment seed.

        parts: Labels identifying the stream (ints or strings).

    Returns:
        int: A 63-bit seed.
    """
    key = ":".join(str(p) for p in (seed, *parts)).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def make_generator(seed: int, device="cpu") -> torch.Generator:
    generator = torch.Generator(device=device)
    generator.manual_seed(seed)
    return generator


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
