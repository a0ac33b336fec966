"""Exact counting at tiny sizes, containment polynomials, and log-scale
asymptotics for rectangle counts and permanents.

The containment polynomial q_{n0}(p) is the probability that a binomial
n0 x n0 x n0 array contains an order-n0 Latin square.  It is computed by
inclusion-exclusion over the full list of order-n0 squares, which is only
feasible for n0 <= 3 (12 squares, 2^12 terms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from .arrays import Array3D
from .errors import SizeCapError
from .kernels import permanent_bitmask

__all__ = [
    "Polynomial",
    "PermanentBounds",
    "count_latin_boxes",
    "enumerate_squares",
    "square_supports",
    "contains_square",
    "q_small",
    "q_tilde",
    "fixed_point",
    "fixed_points",
    "iterate_block_probability",
    "rectangle_count_asymptotic",
    "permanent_bounds",
    "count_rectangles_exact",
]

COUNT_ROW_CAP = 5
COUNT_SYMBOL_CAP = 7
RECT_CAP = 7


@dataclass(frozen=True)
class Polynomial:
    """Univariate polynomial; coeffs[i] multiplies p**i."""

    coeffs: tuple[float, ...]

    def __call__(self, p: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * p + c
        return acc

    @property
    def degree(self) -> int:
        d = len(self.coeffs) - 1
        while d > 0 and self.coeffs[d] == 0:
            d -= 1
        return d

    def to_list(self) -> list[float]:
        return list(self.coeffs)

    def __repr__(self) -> str:
        terms = [
            f"{c:+g}p^{i}" if i else f"{c:+g}"
            for i, c in enumerate(self.coeffs)
            if c
        ]
        return "Polynomial(" + (" ".join(terms) or "0") + ")"


# -- exact counts ------------------------------------------------------------


def count_latin_boxes(m: int, n: int, k: int) -> int:
    """Number of m x n x k Latin boxes (m x n Latin rectangles on k symbols).

    Row-wise enumeration: each row is an injective symbol tuple avoiding the
    symbols already used in each column.  Exhaustive, hence the size guard.
    """
    if m < 1 or n < 1 or k < 1:
        raise ValueError("dims must be positive")
    if max(m, n) > COUNT_ROW_CAP or k > COUNT_SYMBOL_CAP:
        raise SizeCapError(
            f"count_latin_boxes guard: max(m,n) <= {COUNT_ROW_CAP}, k <= {COUNT_SYMBOL_CAP}"
        )
    col_used = [0] * n

    def rows_from(r: int) -> int:
        if r == m:
            return 1
        total = 0
        row_used = 0

        def cols_from(c: int) -> int:
            nonlocal row_used
            if c == n:
                return rows_from(r + 1)
            subtotal = 0
            avail = ~(row_used | col_used[c])
            for v in range(k):
                if (avail >> v) & 1:
                    bit = 1 << v
                    row_used |= bit
                    col_used[c] |= bit
                    subtotal += cols_from(c + 1)
                    row_used &= ~bit
                    col_used[c] &= ~bit
            return subtotal

        total = cols_from(0)
        return total

    return rows_from(0)


@lru_cache(maxsize=None)
def enumerate_squares(n0: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All order-n0 Latin squares as row tuples (grid[r][c] = symbol)."""
    if not 1 <= n0 <= 4:
        raise SizeCapError("square enumeration capped at order 4")
    squares: list[tuple[tuple[int, ...], ...]] = []
    col_used = [0] * n0
    grid: list[tuple[int, ...]] = []

    def build_row(r: int, c: int, row: list[int], row_used: int) -> None:
        if c == n0:
            grid.append(tuple(row))
            if r + 1 == n0:
                squares.append(tuple(grid))
            else:
                build_row(r + 1, 0, [], 0)
            grid.pop()
            return
        for v in range(n0):
            bit = 1 << v
            if (row_used | col_used[c]) & bit:
                continue
            col_used[c] |= bit
            row.append(v)
            build_row(r, c + 1, row, row_used | bit)
            row.pop()
            col_used[c] &= ~bit

    build_row(0, 0, [], 0)
    return tuple(squares)


@lru_cache(maxsize=None)
def square_supports(n0: int) -> tuple[int, ...]:
    """Support bitmasks of the order-n0 squares over the n0^3 cube.

    Cell (r, c, v) is bit (r*n0 + c)*n0 + v, matching Array3D's shaft-major
    layout, so a cube contains square i iff supports[i] & ~cube_mask == 0.
    """
    masks = []
    for grid in enumerate_squares(n0):
        mask = 0
        for r in range(n0):
            for c in range(n0):
                mask |= 1 << ((r * n0 + c) * n0 + grid[r][c])
        masks.append(mask)
    return tuple(masks)


def _cube_mask(arr: Array3D) -> int:
    mask = 0
    for s, shaft in enumerate(arr.shafts):
        mask |= shaft << (s * arr.k)
    return mask


def contains_square(arr: Array3D) -> bool:
    """Does the n0-cube contain an order-n0 Latin square?  (n0 <= 3.)

    Direct containment test against the enumerated square list; independent
    of the backtracking finders.
    """
    n0 = arr.m
    if arr.dims != (n0, n0, n0) or n0 > 3:
        raise SizeCapError("containment test is for cubes of order <= 3")
    cube = _cube_mask(arr)
    return any(sup & ~cube == 0 for sup in square_supports(n0))


# -- containment polynomials and fixed points --------------------------------


def q_small(n0: int) -> Polynomial:
    """Exact containment polynomial q_{n0}(p) by inclusion-exclusion.

    For n0 = 2 this is 2p^4 - p^8.  Capped at n0 = 3 (2^12 terms); beyond
    that the square list explodes.
    """
    if not 1 <= n0 <= 3:
        raise SizeCapError("q_small handles n0 <= 3 only")
    supports = square_supports(n0)
    t = len(supports)
    coeffs = [0] * (n0 ** 3 + 1)
    union = [0] * (1 << t)
    for s in range(1, 1 << t):
        low = s & -s
        union[s] = union[s ^ low] | supports[low.bit_length() - 1]
        sign = 1 if s.bit_count() % 2 else -1
        coeffs[union[s].bit_count()] += sign
    return Polynomial(tuple(coeffs))


def q_tilde(n0: int) -> Polynomial:
    """The two-square lower bound 2p^{n0^2} - p^{2 n0^2}."""
    e = n0 * n0
    coeffs = [0] * (2 * e + 1)
    coeffs[e] = 2
    coeffs[2 * e] = -1
    return Polynomial(tuple(coeffs))


def fixed_points(q, grid: int = 4096, tol: float = 1e-9) -> list[float]:
    """All interior solutions of q(x) = x found by sign-change bisection.

    Scans (0, 1) exclusive of the endpoints (containment polynomials always
    have q(1) = 1).
    """
    lo_edge, hi_edge = 1e-7, 1.0 - 1e-7
    xs = [lo_edge + (hi_edge - lo_edge) * i / grid for i in range(grid + 1)]
    gs = [q(x) - x for x in xs]
    roots = []
    for i in range(grid):
        a, b, ga, gb = xs[i], xs[i + 1], gs[i], gs[i + 1]
        if ga == 0.0:
            roots.append(a)
            continue
        if ga * gb < 0:
            while b - a > tol:
                mid = (a + b) / 2
                gm = q(mid) - mid
                if gm == 0.0:
                    a = b = mid
                elif (gm < 0) == (ga < 0):
                    a, ga = mid, gm
                else:
                    b = mid
            roots.append((a + b) / 2)
    return roots


def fixed_point(q, tol: float = 1e-9) -> float:
    """The largest interior fixed point of q on (0, 1).

    Raises if q(x) - x never changes sign inside the interval.
    """
    roots = fixed_points(q, tol=tol)
    if not roots:
        raise ValueError("no interior fixed point: q(x) - x has no sign change in (0,1)")
    return roots[-1]


def iterate_block_probability(q, p: float, levels: int) -> list[float]:
    """The sequence p_1 = q(p), p_k = q(p_{k-1}) for k <= levels.

    Above the fixed point the sequence increases toward 1; below it, it
    decreases toward 0.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if levels < 0:
        raise ValueError("levels must be non-negative")
    seq = []
    x = p
    for _ in range(levels):
        x = min(1.0, max(0.0, q(x)))
        seq.append(x)
    return seq


# -- log-scale asymptotics ----------------------------------------------------


def rectangle_count_asymptotic(n: int, eps: float, p: Optional[float] = None) -> float:
    """Natural log of the leading-order count of (1-eps)n x n x n Latin boxes
    supported by a density-p binomial array (p omitted: the full count).

    Log of ((1/eps)^{eps/(1-eps)} * (n/e^2) * p)^{(1-eps) n^2}.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    base = math.log(n) - 2.0 + (eps / (1.0 - eps)) * math.log(1.0 / eps)
    if p is not None:
        if not 0.0 < p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        base += math.log(p)
    return (1.0 - eps) * n * n * base


class PermanentBounds:
    """Log-scale sandwich for permanents of k-regular n x n 0-1 matrices."""

    __slots__ = ("lower_log", "upper_log", "ef_lower_log")

    def __init__(self, lower_log: float, upper_log: float, ef_lower_log: float):
        self.lower_log = lower_log
        self.upper_log = upper_log
        self.ef_lower_log = ef_lower_log

    def __iter__(self):
        return iter((self.lower_log, self.upper_log))

    def __repr__(self) -> str:
        return (
            f"PermanentBounds(lower_log={self.lower_log:.6g}, "
            f"upper_log={self.upper_log:.6g}, ef_lower_log={self.ef_lower_log:.6g})"
        )


def permanent_bounds(n: int, k: int) -> PermanentBounds:
    """(k/e)^n lower and Bregman (k!)^{n/k} upper bound, plus the sharper
    k^n n!/n^n lower bound, all as natural logs.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    lower = n * (math.log(k) - 1.0)
    upper = (n / k) * math.lgamma(k + 1)
    ef = n * math.log(k) + math.lgamma(n + 1) - n * math.log(n)
    return PermanentBounds(lower, upper, ef)


def count_rectangles_exact(m: int, n: int) -> int:
    """Number of m x n Latin rectangles on n symbols, counted as sequences
    of pairwise non-overlapping permutation matrices.

    Depth-first over the first m-1 permutation matrices, updating the
    availability graph (complement of the union, (n-i)-regular after i
    steps); the final level is the permanent of what remains.  Must agree
    with count_latin_boxes(m, n, n).
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    if n > RECT_CAP:
        raise SizeCapError(f"count_rectangles_exact guard: n <= {RECT_CAP}")
    full = (1 << n) - 1
    avail = [full] * n  # row bitmasks of the availability graph

    def perms_from(depth: int) -> int:
        if depth == m - 1:
            return permanent_bitmask(avail, n)
        total = 0
        chosen = [0] * n

        def assign(r: int, col_free: int) -> int:
            nonlocal total
            if r == n:
                for i in range(n):
                    avail[i] ^= chosen[i]
                sub = perms_from(depth + 1)
                for i in range(n):
                    avail[i] ^= chosen[i]
                return sub
            acc = 0
            options = avail[r] & col_free
            while options:
                bit = options & -options
                options ^= bit
                chosen[r] = bit
                acc += assign(r + 1, col_free ^ bit)
            chosen[r] = 0
            return acc

        total = assign(0, full)
        return total

    return perms_from(0)
