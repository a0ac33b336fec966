"""Seedable, portable randomness with derived substreams.

All randomness in this package flows through numpy's PCG64 generator.  A
trial/stage gets its own generator derived from ``(master_seed, *path)`` via
``numpy.random.SeedSequence`` spawn keys, so trial i can be replayed in
isolation and results are bit-identical for a fixed numpy version.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

__all__ = ["substream", "randbelow", "GeneratorLike"]

GeneratorLike = np.random.Generator


def _key_part(part: Union[int, str]) -> int:
    """Spawn keys must be ints; label parts hash to stable 32-bit words."""
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode()).digest()[:4], "little")
    if part < 0:
        raise ValueError("path parts must be non-negative")
    return int(part)


def substream(master_seed: int, *path: Union[int, str]) -> np.random.Generator:
    """Generator for the substream addressed by ``path`` under ``master_seed``.

    ``substream(s)`` is the master stream; ``substream(s, i)`` is trial i;
    deeper paths (ints or string labels) address stages within a trial.
    """
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=tuple(_key_part(p) for p in path)
    )
    return np.random.Generator(np.random.PCG64(seq))


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Exact uniform integer in [0, n), valid for arbitrary-precision ``n``.

    numpy's integer sampling is capped at 64 bits; weighted choices over
    permanent-sized counts need more.  Uses rejection sampling on raw bytes,
    so the result is exactly uniform and deterministic given the generator
    state.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if n == 1:
        return 0
    bits = n.bit_length() + 32  # slack keeps the rejection rate ~2**-32
    nbytes = (bits + 7) // 8
    span = 1 << (8 * nbytes)
    limit = span - span % n
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little")
        if x < limit:
            return x % n
