from __future__ import annotations

import hashlib

import numpy as np


def stream_seed(seed: int, purpose: str) -> int:
    """64-bit seed derived from (seed, purpose); stable across platforms and runs."""
    digest = hashlib.blake2b(f"{int(seed)}:{purpose}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Independent random stream for one named consumer.

    Modules never share generator state: each asks for its own purpose string,
    e.g. ``stream(seed, "noise/eps=1e-06")``.
    """
    return np.random.default_rng(stream_seed(seed, purpose))
