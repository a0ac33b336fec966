"""Random greedy edge-disjoint triangle packing in tripartite 3-uniform
hypergraphs, with trajectory tracking against the differential-equation
prediction y(x) = 1/sqrt(1+2x), z(x) = 1/(1+2x).

A set of edge-disjoint triangles (SET) is exactly a partial Latin box: the
triangle (a, b, c) is the assignment row a, column b, symbol c, and
edge-disjointness is the no-repeat rule in rows and columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .arrays import Array3D, PartialLatinBox
from .rng import substream

__all__ = [
    "TripartiteHypergraph",
    "TriangleSET",
    "Trajectory",
    "TrajectorySample",
    "from_array",
    "greedy_pack",
    "process_pack",
    "predicted",
    "ode_residual",
    "deviation_report",
    "trajectory_csv_rows",
]

SeedLike = Union[int, np.random.Generator]


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(int(seed))


@dataclass(frozen=True)
class TripartiteHypergraph:
    """Triangle set over three n-vertex classes, as an (n, n, n) bool cube."""

    n: int
    triangles: np.ndarray

    def __post_init__(self):
        if self.triangles.shape != (self.n, self.n, self.n):
            raise ValueError("triangle cube must be (n, n, n)")

    @classmethod
    def complete(cls, n: int) -> "TripartiteHypergraph":
        return cls(n, np.ones((n, n, n), dtype=bool))

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.sum())


def from_array(M: Array3D) -> TripartiteHypergraph:
    """T(H) = 1-cells of the cube M; inverse of the SET correspondence."""
    if M.m != M.n or M.n != M.k:
        raise ValueError("tripartite correspondence needs an n x n x n cube")
    return TripartiteHypergraph(M.n, M.to_bool_cube())


class TriangleSET:
    """Edge-disjoint triangles with covered-edge maps and vertex degrees.

    covered_ab[a, b] is True once some chosen triangle uses the (a, b) edge;
    likewise covered_ac and covered_bc.  deg_a/b/c count chosen triangles at
    each vertex; in SET terms these are the d_S(v).
    """

    __slots__ = ("n", "chosen", "covered_ab", "covered_ac", "covered_bc",
                 "deg_a", "deg_b", "deg_c")

    def __init__(self, n: int):
        self.n = n
        self.chosen: list[tuple[int, int, int]] = []
        self.covered_ab = np.zeros((n, n), dtype=bool)
        self.covered_ac = np.zeros((n, n), dtype=bool)
        self.covered_bc = np.zeros((n, n), dtype=bool)
        self.deg_a = np.zeros(n, dtype=np.int64)
        self.deg_b = np.zeros(n, dtype=np.int64)
        self.deg_c = np.zeros(n, dtype=np.int64)

    @property
    def size(self) -> int:
        return len(self.chosen)

    def conflicts(self, a: int, b: int, c: int) -> bool:
        return bool(
            self.covered_ab[a, b] or self.covered_ac[a, c] or self.covered_bc[b, c]
        )

    def add(self, a: int, b: int, c: int) -> None:
        if self.conflicts(a, b, c):
            raise ValueError(f"triangle ({a},{b},{c}) shares an edge with the SET")
        self.chosen.append((a, b, c))
        self.covered_ab[a, b] = True
        self.covered_ac[a, c] = True
        self.covered_bc[b, c] = True
        self.deg_a[a] += 1
        self.deg_b[b] += 1
        self.deg_c[c] += 1

    def degrees(self) -> np.ndarray:
        """d_S(v) over all 3n vertices."""
        return np.concatenate([self.deg_a, self.deg_b, self.deg_c])

    def to_partial_latin_box(self) -> PartialLatinBox:
        """The corresponding partial Latin box: (a, b, c) -> entry (a,b)=c."""
        box = PartialLatinBox(self.n, self.n, self.n)
        for a, b, c in self.chosen:
            box.place(a, b, c)
        return box

    def is_maximal(self, H: TripartiteHypergraph) -> bool:
        """No triangle of H is edge-disjoint from the SET."""
        return not self._available(H).any()

    def _available(self, H: TripartiteHypergraph) -> np.ndarray:
        return (
            H.triangles
            & ~self.covered_ab[:, :, None]
            & ~self.covered_ac[:, None, :]
            & ~self.covered_bc[None, :, :]
        )


@dataclass(frozen=True)
class TrajectorySample:
    step: int
    deg_min: float
    deg_mean: float
    deg_max: float
    codeg_mean: float


@dataclass
class Trajectory:
    """Degree/codegree statistics recorded along a packing process."""

    n: int
    samples: list[TrajectorySample] = field(default_factory=list)

    def __post_init__(self):
        steps = [s.step for s in self.samples]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("sample steps must be strictly increasing")


def greedy_pack(H: TripartiteHypergraph, seed: SeedLike) -> TriangleSET:
    """Random greedy SET: repeatedly add a uniform available triangle of H
    until none remains.  Output is maximal by construction.
    """
    rng = _as_rng(seed)
    S = TriangleSET(H.n)
    n = H.n
    while True:
        avail = S._available(H)
        idx = np.flatnonzero(avail.ravel())
        if idx.size == 0:
            return S
        flat = int(idx[int(rng.integers(idx.size))])
        a, rem = divmod(flat, n * n)
        b, c = divmod(rem, n)
        S.add(a, b, c)


def _codegree_mean(S: TriangleSET, H: Optional[TripartiteHypergraph]) -> float:
    """Mean available-triangle count over uncovered edges of all 3 classes.

    For the uncovered edge (a, b), d_ab counts c with (a,b,c) a triangle and
    both (a,c), (b,c) uncovered; covered edges are excluded from the mean.
    """
    okB = ~S.covered_ac
    okC = ~S.covered_bc
    okA = ~S.covered_ab
    fB = okB.astype(np.float64)
    fC = okC.astype(np.float64)
    fA = okA.astype(np.float64)
    if H is None:
        d_ab = fB @ fC.T
        d_ac = fA @ fC
        d_bc = fA.T @ fB
    else:
        cube = H.triangles.astype(np.float64)
        d_ab = np.einsum("abc,ac,bc->ab", cube, fB, fC)
        d_ac = np.einsum("abc,ab,bc->ac", cube, fA, fC)
        d_bc = np.einsum("abc,ab,ac->bc", cube, fA, fB)
    vals = np.concatenate([d_ab[okA], d_ac[okB], d_bc[okC]])
    if vals.size == 0:
        return 0.0
    return float(vals.mean())


def process_pack(
    n: int,
    m_max: int,
    record_every: Optional[int] = None,
    seed: SeedLike = 0,
) -> Trajectory:
    """Stream the triangles of the complete tripartite hypergraph in a
    uniformly random order, inserting each one that is edge-disjoint from
    the SET so far; record statistics every ``record_every`` considered
    triangles (default: about 50 samples over the horizon).
    """
    total = n ** 3
    if not 0 <= m_max <= total:
        raise ValueError(f"m_max must lie in [0, {total}]")
    if record_every is None:
        record_every = max(1, math.ceil(m_max / 50))
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    rng = _as_rng(seed)
    order = rng.permutation(total)
    S = TriangleSET(n)
    samples = []

    def snap(step: int) -> None:
        degs = S.degrees()
        samples.append(
            TrajectorySample(
                step=step,
                deg_min=float(degs.min()),
                deg_mean=float(degs.mean()),
                deg_max=float(degs.max()),
                codeg_mean=_codegree_mean(S, None),
            )
        )

    snap(0)
    nn = n * n
    cov_ab = S.covered_ab
    cov_ac = S.covered_ac
    cov_bc = S.covered_bc
    for step, flat in enumerate(order[:m_max], start=1):
        a, rem = divmod(int(flat), nn)
        b, c = divmod(rem, n)
        if not (cov_ab[a, b] or cov_ac[a, c] or cov_bc[b, c]):
            S.add(a, b, c)
        if step % record_every == 0:
            snap(step)
    if m_max % record_every != 0 and m_max > 0:
        snap(m_max)
    return Trajectory(n, samples)


def predicted(x: float) -> tuple[float, float]:
    """(y, z) at scaled time x = m/n^2: y = 1/sqrt(1+2x), z = 1/(1+2x)."""
    if x < 0:
        raise ValueError("scaled time must be non-negative")
    z = 1.0 / (1.0 + 2.0 * x)
    return math.sqrt(z), z


def ode_residual(x: float, h: float = 1e-4) -> tuple[float, float]:
    """Central-difference residuals of y' = -yz and z' = -2z^2 at x."""
    if x - h < 0:
        raise ValueError("need x >= h for central differences")
    y_hi, z_hi = predicted(x + h)
    y_lo, z_lo = predicted(x - h)
    y, z = predicted(x)
    res_y = (y_hi - y_lo) / (2 * h) - (-y * z)
    res_z = (z_hi - z_lo) / (2 * h) - (-2 * z * z)
    return res_y, res_z


def deviation_report(traj: Trajectory, n: Optional[int] = None) -> dict[str, float]:
    """Sup over samples of |deg_mean/n - (1 - y)| and |codeg_mean/n - z|."""
    if not traj.samples:
        raise ValueError("trajectory has no samples")
    n = traj.n if n is None else n
    sup_deg = 0.0
    sup_codeg = 0.0
    for s in traj.samples:
        x = s.step / (n * n)
        y, z = predicted(x)
        sup_deg = max(sup_deg, abs(s.deg_mean / n - (1.0 - y)))
        sup_codeg = max(sup_codeg, abs(s.codeg_mean / n - z))
    return {"sup_deg_dev": sup_deg, "sup_codeg_dev": sup_codeg}


def trajectory_csv_rows(traj: Trajectory) -> list[list[str]]:
    """Rows for the trajectory CSV: header plus one row per sample.

    x is steps scaled by n^2; y_meas is the mean uncovered-degree fraction
    1 - deg_mean/n and z_meas the mean codegree fraction, the measured
    counterparts of the predicted y and z columns.
    """
    n = traj.n
    rows = [
        ["step", "x", "deg_min", "deg_mean", "deg_max", "codeg_mean",
         "y_meas", "z_meas", "y_pred", "z_pred"]
    ]
    for s in traj.samples:
        x = s.step / (n * n)
        y, z = predicted(x)
        rows.append(
            [
                str(s.step),
                f"{x:.6f}",
                f"{s.deg_min:.6f}",
                f"{s.deg_mean:.6f}",
                f"{s.deg_max:.6f}",
                f"{s.codeg_mean:.6f}",
                f"{1.0 - s.deg_mean / n:.6f}",
                f"{s.codeg_mean / n:.6f}",
                f"{y:.6f}",
                f"{z:.6f}",
            ]
        )
    return rows
