"""Shared oracles for the test suite.

The enumeration oracle here is deliberately independent of the package
internals: Latin boxes are rebuilt row by row from symbol permutations and
frozen into cell bitmasks, so containment and counting against an arbitrary
array reduce to mask tests.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from latinbox import Array3D


@lru_cache(maxsize=None)
def box_supports(m: int, n: int, k: int) -> tuple[int, ...]:
    """Every Latin box of the given shape as a bitmask over cells
    (bit index (r*n + c)*k + v)."""
    outs: list[int] = []

    def extend(rows: tuple[tuple[int, ...], ...]) -> None:
        if len(rows) == m:
            mask = 0
            for r, row in enumerate(rows):
                for c, v in enumerate(row):
                    mask |= 1 << ((r * n + c) * k + v)
            outs.append(mask)
            return
        for perm in itertools.permutations(range(k), n):
            if all(perm[c] != prev[c] for prev in rows for c in range(n)):
                extend(rows + (perm,))

    extend(())
    return tuple(outs)


def array_mask(arr: Array3D) -> int:
    """Cell bitmask of an array under the (r*n + c)*k + v numbering."""
    mask = 0
    for r, c, v in arr.cells():
        mask |= 1 << ((r * arr.n + c) * arr.k + v)
    return mask


def oracle_contains(arr: Array3D) -> bool:
    mask = array_mask(arr)
    return any(mask & s == s for s in box_supports(arr.m, arr.n, arr.k))


def oracle_count(arr: Array3D) -> int:
    mask = array_mask(arr)
    return sum(1 for s in box_supports(arr.m, arr.n, arr.k) if mask & s == s)


def mask_to_shafts(m: int, n: int, k: int, mask: int) -> list[int]:
    """Split a cell bitmask into per-shaft symbol masks."""
    full = (1 << k) - 1
    return [(mask >> (s * k)) & full for s in range(m * n)]


def random_array(rng: np.random.Generator, m: int, n: int, k: int, p: float) -> Array3D:
    return Array3D.from_bool_cube(rng.random((m, n, k)) < p)
