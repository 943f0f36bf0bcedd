"""Reproducible parallel random streams.

Counter-based (Philox) streams keyed on the master seed, with the stream
index placed in the counter block.  Stream i is the same bit sequence no
matter how many workers run, which is what makes estimates byte-identical
across worker counts.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1


def _key_from_seed(seed: int) -> np.ndarray:
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def stream_rng(seed: int, stream: int, salt: int = 0) -> np.random.Generator:
    """Generator for stream ``stream`` of master ``seed``.

    Distinct (stream, salt) pairs get disjoint counter blocks; each block
    allows 2^64 Philox outputs, far beyond any single run here.
    """
    if stream < 0 or salt < 0:
        raise ConfigError("stream and salt must be non-negative")
    counter = np.array([0, stream & _MASK64, salt & _MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=_key_from_seed(seed)))
