"""0-1 arrays, random array models, shafts, and Latin-box validation.

The universal sample object is :class:`Array3D`, an m x n x k 0-1 array.  A
*line* is the set of cells obtained by fixing two coordinates; the line
(r, c, .) along the symbol axis is called a *shaft*.  A Latin box is an array
with exactly m*n ones and at most one 1 per line; for m = n = k this is a
Latin square in 0-1 array form.

Storage is shaft-major: each shaft is one Python int whose bit v is the cell
(r, c, v).  Shaft scans, emptiness tests, and degree counts are therefore
single word operations.  All indices are 0-based in this API; serialized
forms (JSON / binary header docs) use 1-based triples to match the usual
[n] = {1..n} convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .rng import substream

__all__ = [
    "Array3D",
    "ColoredArray",
    "PartialLatinBox",
    "ArrayProcess",
    "sample_binomial",
    "sample_process",
    "sample_green_blue",
    "empty_shafts",
    "shaft_degrees",
    "validate_latin_box",
]

_MAGIC = b"LBX1"
_VERSION = 1

SeedLike = Union[int, np.random.Generator]


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(int(seed))


class Array3D:
    """An m x n x k 0-1 array stored as one bitmask int per shaft.

    ``shafts[r * n + c]`` holds bit v for cell (r, c, v).  ``ones`` is kept
    in sync by every mutator.
    """

    __slots__ = ("m", "n", "k", "shafts", "ones")

    def __init__(self, m: int, n: int, k: int, shafts: Optional[list[int]] = None):
        if m < 1 or n < 1 or k < 1:
            raise ValueError(f"dims must be positive, got ({m},{n},{k})")
        self.m = m
        self.n = n
        self.k = k
        if shafts is None:
            self.shafts = [0] * (m * n)
            self.ones = 0
        else:
            if len(shafts) != m * n:
                raise ValueError("shaft list length does not match dims")
            full = (1 << k) - 1
            if any(s < 0 or s > full for s in shafts):
                raise ValueError("shaft mask out of range for k symbols")
            self.shafts = list(shafts)
            self.ones = sum(s.bit_count() for s in self.shafts)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, m: int, n: int, k: int) -> "Array3D":
        return cls(m, n, k)

    @classmethod
    def full(cls, m: int, n: int, k: int) -> "Array3D":
        mask = (1 << k) - 1
        return cls(m, n, k, [mask] * (m * n))

    @classmethod
    def from_cells(cls, m: int, n: int, k: int, cells: Iterable[tuple[int, int, int]]) -> "Array3D":
        arr = cls(m, n, k)
        for r, c, v in cells:
            arr.set_cell(r, c, v)
        return arr

    @classmethod
    def from_bool_cube(cls, cube: np.ndarray) -> "Array3D":
        """Build from an (m, n, k) boolean/0-1 numpy cube."""
        if cube.ndim != 3:
            raise ValueError("cube must be 3-dimensional")
        m, n, k = cube.shape
        packed = np.packbits(cube.astype(bool), axis=-1, bitorder="little")
        shafts = [
            int.from_bytes(packed[r, c].tobytes(), "little")
            for r in range(m)
            for c in range(n)
        ]
        return cls(m, n, k, shafts)

    def to_bool_cube(self) -> np.ndarray:
        out = np.zeros((self.m, self.n, self.k), dtype=bool)
        for r, c, v in self.cells():
            out[r, c, v] = True
        return out

    # -- element access ----------------------------------------------------

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.m, self.n, self.k)

    def _check_index(self, r: int, c: int, v: int) -> None:
        if not (0 <= r < self.m and 0 <= c < self.n and 0 <= v < self.k):
            raise IndexError(f"cell ({r},{c},{v}) out of bounds for dims {self.dims}")

    def get(self, r: int, c: int, v: int) -> int:
        self._check_index(r, c, v)
        return (self.shafts[r * self.n + c] >> v) & 1

    def set_cell(self, r: int, c: int, v: int, value: int = 1) -> None:
        self._check_index(r, c, v)
        s = r * self.n + c
        old = (self.shafts[s] >> v) & 1
        if value and not old:
            self.shafts[s] |= 1 << v
            self.ones += 1
        elif not value and old:
            self.shafts[s] &= ~(1 << v)
            self.ones -= 1

    def shaft_mask(self, r: int, c: int) -> int:
        if not (0 <= r < self.m and 0 <= c < self.n):
            raise IndexError(f"shaft ({r},{c}) out of bounds")
        return self.shafts[r * self.n + c]

    def cells(self) -> Iterator[tuple[int, int, int]]:
        """Yield 0-based (r, c, v) triples of 1-cells in row-major order."""
        for s, mask in enumerate(self.shafts):
            r, c = divmod(s, self.n)
            while mask:
                v = (mask & -mask).bit_length() - 1
                yield (r, c, v)
                mask &= mask - 1

    def density(self) -> float:
        return self.ones / (self.m * self.n * self.k)

    def copy(self) -> "Array3D":
        return Array3D(self.m, self.n, self.k, self.shafts)

    def union(self, other: "Array3D") -> "Array3D":
        if self.dims != other.dims:
            raise ValueError("dims mismatch")
        return Array3D(self.m, self.n, self.k, [a | b for a, b in zip(self.shafts, other.shafts)])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Array3D)
            and self.dims == other.dims
            and self.shafts == other.shafts
        )

    def __hash__(self):
        return hash((self.dims, tuple(self.shafts)))

    def __repr__(self) -> str:
        return f"Array3D(dims={self.dims}, ones={self.ones})"

    # -- serialization -----------------------------------------------------
    # Binary layout: magic "LBX1", u16 version, u16 reserved, u32 m, n, k
    # (little endian), then ceil(mnk/8) bytes of bits in row-major (r, c, v)
    # order, LSB first within each byte.

    def to_bytes(self) -> bytes:
        header = _MAGIC + _VERSION.to_bytes(2, "little") + b"\x00\x00"
        header += self.m.to_bytes(4, "little") + self.n.to_bytes(4, "little") + self.k.to_bytes(4, "little")
        big = 0
        for s in range(len(self.shafts) - 1, -1, -1):
            big = (big << self.k) | self.shafts[s]
        nbits = self.m * self.n * self.k
        return header + big.to_bytes((nbits + 7) // 8, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Array3D":
        if data[:4] != _MAGIC:
            raise ValueError("bad magic; not an Array3D binary blob")
        version = int.from_bytes(data[4:6], "little")
        if version != _VERSION:
            raise ValueError(f"unsupported version {version}")
        m = int.from_bytes(data[8:12], "little")
        n = int.from_bytes(data[12:16], "little")
        k = int.from_bytes(data[16:20], "little")
        nbits = m * n * k
        body = data[20 : 20 + (nbits + 7) // 8]
        if len(body) != (nbits + 7) // 8:
            raise ValueError("truncated payload")
        big = int.from_bytes(body, "little")
        full = (1 << k) - 1
        shafts = [(big >> (s * k)) & full for s in range(m * n)]
        return cls(m, n, k, shafts)

    def to_json_dict(self) -> dict:
        """Debug form: 1-cells as 1-based [r, c, v] triples."""
        return {
            "dims": [self.m, self.n, self.k],
            "cells": [[r + 1, c + 1, v + 1] for r, c, v in self.cells()],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Array3D":
        m, n, k = d["dims"]
        return cls.from_cells(m, n, k, ((r - 1, c - 1, v - 1) for r, c, v in d["cells"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "Array3D":
        return cls.from_json_dict(json.loads(s))


class ColoredArray:
    """An n x n x m array whose 1s are green or blue, kept as two layers.

    Green is a binomial layer; blue patches every green-empty shaft with
    exactly one 1, so the combined array never has an empty shaft.  The two
    supports stay disjoint.
    """

    __slots__ = ("green", "blue", "_combined")

    def __init__(self, green: Array3D, blue: Array3D):
        if green.dims != blue.dims:
            raise ValueError("green/blue dims mismatch")
        n1, n2, m = green.dims
        if n1 != n2 or m < n1:
            raise ValueError("colored arrays must be n x n x m with m >= n")
        for s in range(n1 * n2):
            g, b = green.shafts[s], blue.shafts[s]
            if g & b:
                raise ValueError("green and blue supports overlap")
            if g == 0 and b.bit_count() != 1:
                raise ValueError("green-empty shaft must hold exactly one blue 1")
            if g != 0 and b != 0:
                raise ValueError("blue 1 in a green-nonempty shaft")
        self.green = green
        self.blue = blue
        self._combined: Optional[Array3D] = None

    @property
    def n(self) -> int:
        return self.green.m

    @property
    def m(self) -> int:
        return self.green.k

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.green.dims

    def combined(self) -> Array3D:
        if self._combined is None:
            self._combined = self.green.union(self.blue)
        return self._combined

    @classmethod
    def from_green(cls, green: Array3D, rng: np.random.Generator) -> "ColoredArray":
        """Patch every green-empty shaft with one uniform blue 1."""
        n1, n2, m = green.dims
        blue = Array3D.zeros(n1, n2, m)
        for s in range(n1 * n2):
            if green.shafts[s] == 0:
                r, c = divmod(s, n2)
                blue.set_cell(r, c, int(rng.integers(m)))
        return cls(green, blue)


@dataclass
class PartialLatinBox:
    """A partial map (r, c) -> v over [m] x [n] with symbols in [k].

    The Latin invariants (no symbol repeated in a row or a column) are
    enforced by :meth:`place`; the raw constructor accepts any entries so
    that validators can be exercised on broken inputs.
    """

    n_rows: int
    n_cols: int
    n_syms: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        self._row_used = [0] * self.n_rows
        self._col_used = [0] * self.n_cols
        for (r, c), v in self.entries.items():
            if 0 <= r < self.n_rows and 0 <= c < self.n_cols and 0 <= v < self.n_syms:
                self._row_used[r] |= 1 << v
                self._col_used[c] |= 1 << v

    def conflicts(self, r: int, c: int, v: int) -> bool:
        """True if placing v at (r, c) would repeat a symbol in row or column."""
        return bool((self._row_used[r] >> v) & 1 or (self._col_used[c] >> v) & 1)

    def place(self, r: int, c: int, v: int) -> None:
        if not (0 <= r < self.n_rows and 0 <= c < self.n_cols and 0 <= v < self.n_syms):
            raise IndexError(f"entry ({r},{c})={v} out of bounds")
        if (r, c) in self.entries:
            raise ValueError(f"cell ({r},{c}) already covered")
        if self.conflicts(r, c, v):
            raise ValueError(f"symbol {v} already used in row {r} or column {c}")
        self.entries[(r, c)] = v
        self._row_used[r] |= 1 << v
        self._col_used[c] |= 1 << v

    def remove(self, r: int, c: int) -> None:
        v = self.entries.pop((r, c))
        self._row_used[r] &= ~(1 << v)
        self._col_used[c] &= ~(1 << v)

    def get(self, r: int, c: int) -> Optional[int]:
        return self.entries.get((r, c))

    def row_used_mask(self, r: int) -> int:
        return self._row_used[r]

    def col_used_mask(self, c: int) -> int:
        return self._col_used[c]

    @property
    def is_proper(self) -> bool:
        return len(self.entries) == self.n_rows * self.n_cols

    def copy(self) -> "PartialLatinBox":
        return PartialLatinBox(self.n_rows, self.n_cols, self.n_syms, dict(self.entries))

    def to_grid(self) -> list[list[Optional[int]]]:
        grid: list[list[Optional[int]]] = [[None] * self.n_cols for _ in range(self.n_rows)]
        for (r, c), v in self.entries.items():
            grid[r][c] = v
        return grid

    def to_json_dict(self) -> dict:
        grid = [[None if v is None else v + 1 for v in row] for row in self.to_grid()]
        return {"rows": self.n_rows, "cols": self.n_cols, "symbols": self.n_syms, "grid": grid}

    @classmethod
    def cyclic(cls, n: int, k: Optional[int] = None) -> "PartialLatinBox":
        """The cyclic Latin square L(r, c) = (r + c) mod n on [n]^2."""
        k = n if k is None else k
        entries = {(r, c): (r + c) % n for r in range(n) for c in range(n)}
        return cls(n, n, k, entries)


@dataclass
class ArrayProcess:
    """A uniformly random order in which the cells of an n x n x m array
    flip from 0 to 1; prefixes give the arrays M_t with |M_t| = t.

    Cell index convention is shaft-major: idx = (r * n + c) * m + v.
    """

    n: int
    m: int
    order: np.ndarray

    @property
    def total(self) -> int:
        return self.n * self.n * self.m

    def cell_of(self, idx: int) -> tuple[int, int, int]:
        s, v = divmod(int(idx), self.m)
        r, c = divmod(s, self.n)
        return (r, c, v)

    def prefix(self, t: int) -> Array3D:
        """The array M_t after the first t flips."""
        if not (0 <= t <= self.total):
            raise ValueError(f"t={t} outside [0, {self.total}]")
        arr = Array3D.zeros(self.n, self.n, self.m)
        nn = self.n * self.n
        shafts = arr.shafts
        for idx in self.order[:t]:
            s, v = divmod(int(idx), self.m)
            shafts[s] |= 1 << v
        arr.ones = sum(x.bit_count() for x in shafts)
        assert arr.ones == t
        return arr

    def shaft_fill_time(self) -> int:
        """First t at which no shaft is empty (t = total if n*n*m cells)."""
        seen = 0
        remaining = self.n * self.n
        hit = [False] * (self.n * self.n)
        for t, idx in enumerate(self.order, start=1):
            s = int(idx) // self.m
            if not hit[s]:
                hit[s] = True
                remaining -= 1
                if remaining == 0:
                    return t
        raise AssertionError("order is not a full permutation")


# -- random models ---------------------------------------------------------


def sample_binomial(m: int, n: int, k: int, p: float, seed: SeedLike) -> Array3D:
    """Each cell is 1 with probability p, independently."""
    if m < 1 or n < 1 or k < 1:
        raise ValueError(f"dims must be positive, got ({m},{n},{k})")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    rng = _as_rng(seed)
    cube = rng.random((m, n, k)) < p
    return Array3D.from_bool_cube(cube)


def sample_process(n: int, m: int, seed: SeedLike) -> ArrayProcess:
    """A uniformly random (n, n, m) array process (Fisher-Yates contract)."""
    if n < 1:
        raise ValueError("n must be positive")
    if m < n:
        raise ValueError("process model requires m >= n")
    rng = _as_rng(seed)
    order = rng.permutation(n * n * m)
    return ArrayProcess(n, m, order)


def sample_green_blue(n: int, m: int, p: float, seed: SeedLike) -> ColoredArray:
    """Binomial green layer plus one uniform blue 1 in each green-empty shaft."""
    if m < n or n < 1:
        raise ValueError("green/blue model requires m >= n >= 1")
    rng = _as_rng(seed)
    green = sample_binomial(n, n, m, p, rng)
    return ColoredArray.from_green(green, rng)


# -- shaft queries ---------------------------------------------------------


def empty_shafts(arr: Array3D) -> list[tuple[int, int]]:
    """All (r, c) whose shaft holds no 1, in lexicographic order."""
    return [divmod(s, arr.n) for s, mask in enumerate(arr.shafts) if mask == 0]


def shaft_degrees(arr: Union[Array3D, ColoredArray], r: int, c: int) -> tuple[int, int]:
    """(d, d_m) for shaft (r, c): total 1s, and 1s among symbols above n.

    Requires the n x n x m orientation (square base, m >= n); d_m counts
    symbols n+1..m, i.e. bits n.. of the shaft mask.
    """
    if isinstance(arr, ColoredArray):
        arr = arr.combined()
    n1, n2, k = arr.dims
    if n1 != n2 or k < n1:
        raise ValueError("shaft degrees need an n x n x m array with m >= n")
    mask = arr.shaft_mask(r, c)
    d = mask.bit_count()
    d_m = (mask >> n1).bit_count()
    return d, d_m


def validate_latin_box(
    box: PartialLatinBox, arr: Array3D, require_proper: bool = False
) -> bool:
    """True iff ``box`` is a valid partial Latin box supported by ``arr``.

    Checks bounds, the row/column distinctness invariants, and that every
    assigned cell is a 1 of ``arr``; with ``require_proper`` the domain must
    be all of [m] x [n].  Raises on dimension mismatch.
    """
    if (box.n_rows, box.n_cols, box.n_syms) != arr.dims:
        raise ValueError(f"box shape {(box.n_rows, box.n_cols, box.n_syms)} does not match array dims {arr.dims}")
    row_seen = [0] * box.n_rows
    col_seen = [0] * box.n_cols
    for (r, c), v in box.entries.items():
        if not (0 <= r < box.n_rows and 0 <= c < box.n_cols and 0 <= v < box.n_syms):
            return False
        bit = 1 << v
        if row_seen[r] & bit or col_seen[c] & bit:
            return False
        row_seen[r] |= bit
        col_seen[c] |= bit
        if not arr.get(r, c, v):
            return False
    if require_proper and not box.is_proper:
        return False
    return True
