"""Deterministic, purpose-keyed random streams.

Every source of randomness in the library draws from a stream keyed by
(seed, purpose, *indices).  Streams are independent of each other and of
evaluation order, so pipelines that could run concurrently produce the
same numbers regardless of scheduling.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Generator for the (seed, purpose, *indices) stream.

    The purpose string is hashed with crc32 so the key is stable across
    processes and platforms.
    """
    key = (zlib.crc32(purpose.encode("utf-8")),) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
