"""Latin-box finders: the exact backtracking oracle, the block recursion,
plane-by-plane perfect matchings, and the staged green/blue construction.

All finders return a :class:`FinderOutcome`.  Success means a proper Latin
box supported by the input; every other status is a failure of the method,
and only the exact oracle's ``exhausted`` is a proof of non-existence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .arrays import Array3D, ColoredArray, PartialLatinBox, validate_latin_box
from .enumeration import enumerate_squares
from .errors import SizeCapError
from .kernels import BACKEND, CAP_HIT, EXHAUSTED, FOUND, PERMANENT_CAP, search_bitmask
from .matching import (
    BipartiteGraph,
    UniformMatchingSampler,
    default_delta,
    permanent,
    pm_count_lower_bound,
    sample_pm_fast,
)
from .packing import from_array as hypergraph_from_array
from .packing import greedy_pack
from .rng import substream

__all__ = [
    "FinderOutcome",
    "StagedParams",
    "StageFailure",
    "find_exact",
    "find_block_recursive",
    "find_plane_matching",
    "build_B2",
    "find_staged",
]

SeedLike = Union[int, np.random.Generator]


def _as_rng(seed: SeedLike, *path) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(int(seed), *path)


def _bits(mask: int):
    while mask:
        yield (mask & -mask).bit_length() - 1
        mask &= mask - 1


class StageFailure(RuntimeError):
    """A staged-construction pass ran out of symbols at some cell even after
    its retry budget."""

    def __init__(self, stage: str, cell: Optional[tuple[int, int]], attempts: int):
        self.stage = stage
        self.cell = cell
        self.attempts = attempts
        where = f" at cell {cell}" if cell is not None else ""
        super().__init__(f"stage {stage} failed{where} after {attempts} attempts")


@dataclass
class FinderOutcome:
    """Result of a finder run.

    status is one of ``success``, ``exhausted`` (search space fully
    explored), ``aborted`` (a constructive stage gave up; see stage/reason),
    or ``indeterminate`` (node budget hit before an answer).
    """

    status: str
    result: Optional[PartialLatinBox] = None
    count: Optional[int] = None
    stage: Optional[str] = None
    reason: Optional[str] = None
    stats: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == "success"

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "stage": self.stage,
            "reason": self.reason,
            "count": None if self.count is None else str(self.count),
            "stats": self.stats,
            "box": None if self.result is None else self.result.to_json_dict(),
        }


def _assignment_to_box(m: int, n: int, k: int, assign: Sequence[int]) -> PartialLatinBox:
    entries = {(s // n, s % n): v for s, v in enumerate(assign)}
    return PartialLatinBox(m, n, k, entries)


def find_exact(
    M: Array3D,
    mode: str = "first",
    node_cap: int = 0,
    mrv: bool = True,
) -> FinderOutcome:
    """Complete backtracking search for a Latin box supported by M.

    ``exhausted`` with unlimited node_cap is a proof that none exists; a hit
    node cap yields ``indeterminate``, never a non-existence claim.  In
    ``count_all`` mode the full search space is explored and ``count`` set;
    that requires tiny dims or a finite node cap.
    """
    m, n, k = M.dims
    if not m <= n <= k:
        raise ValueError(f"find_exact expects m <= n <= k, got {M.dims}")
    if mode not in ("first", "count_all"):
        raise ValueError("mode must be 'first' or 'count_all'")
    if mode == "count_all" and max(M.dims) > 4 and node_cap <= 0:
        raise ValueError("count_all needs dims <= 4 or a finite node_cap")
    code, payload, nodes = search_bitmask(
        m, n, k, M.shafts, count_mode=(mode == "count_all"), node_cap=node_cap, mrv=mrv
    )
    stats = {"nodes": nodes, "backend": BACKEND, "mrv": mrv}
    if code == CAP_HIT:
        return FinderOutcome(
            "indeterminate", reason=f"node cap {node_cap} reached", stats=stats
        )
    if mode == "count_all":
        return FinderOutcome("exhausted", count=payload, stats=stats)
    if code == FOUND:
        box = _assignment_to_box(m, n, k, payload)
        assert validate_latin_box(box, M, require_proper=True)
        return FinderOutcome("success", result=box, stats=stats)
    return FinderOutcome("exhausted", stats=stats)


def _block_base(n: int) -> int:
    for n0 in (2, 3):
        b = n
        while b % n0 == 0:
            b //= n0
        if b == 1:
            return n0
    raise ValueError(f"n={n} is not a power of 2 or 3")


def find_block_recursive(M: Array3D) -> FinderOutcome:
    """Find a Latin square by recursive block structure.

    The cube is viewed as an n0 x n0 x n0 arrangement of sub-cubes; for each
    order-n0 Latin square pattern, the prescribed n0^2 blocks must contain
    (recursively block-structured) Latin squares.  Sub-block results are
    memoized, so each block is solved at most once per level.  ``exhausted``
    only means no *block-structured* square exists; the exact oracle may
    still succeed.
    """
    if not (M.m == M.n == M.k):
        raise ValueError("block recursion needs an n x n x n cube")
    n = M.n
    n0 = _block_base(n)
    patterns = enumerate_squares(n0)
    memo: dict[tuple[int, int, int, int], Optional[dict]] = {}
    stats = {"calls": 0, "memo_hits": 0, "n0": n0}

    def solve(size: int, r0: int, c0: int, v0: int) -> Optional[dict]:
        key = (size, r0, c0, v0)
        if key in memo:
            stats["memo_hits"] += 1
            return memo[key]
        stats["calls"] += 1
        if size == 1:
            out = {(r0, c0): v0} if M.get(r0, c0, v0) else None
            memo[key] = out
            return out
        sub = size // n0
        out = None
        for pat in patterns:
            entries: dict = {}
            for R in range(n0):
                for C in range(n0):
                    got = solve(sub, r0 + R * sub, c0 + C * sub, v0 + pat[R][C] * sub)
                    if got is None:
                        entries = None
                        break
                    entries.update(got)
                if entries is None:
                    break
            if entries is not None:
                out = entries
                break
        memo[key] = out
        return out

    entries = solve(n, 0, 0, 0)
    if entries is None:
        return FinderOutcome("exhausted", reason="no block-structured square", stats=stats)
    box = PartialLatinBox(n, n, n, dict(entries))
    assert validate_latin_box(box, M, require_proper=True)
    return FinderOutcome("success", result=box, stats=stats)


def find_plane_matching(
    M: Array3D,
    delta: Optional[float] = None,
    abort_check: bool = True,
    uniform: str = "exact",
    seed: SeedLike = 0,
    p: Optional[float] = None,
) -> FinderOutcome:
    """Build a Latin box plane by plane via perfect matchings.

    Plane i of the m x n x n array is a bipartite graph between columns and
    symbols; its usable part H_i excludes pairs used by earlier planes, so
    the unused-pair graph stays (n-i)-regular at 0-based step i.  With
    ``abort_check``, the run aborts when the number of perfect matchings of
    H_i drops below the floor L^n n!/n^n with L = (1-delta) k p, using the
    supplied p or the plane's empirical density.  Each chosen matching is
    drawn exactly uniformly (``uniform='exact'``, n <= permanent cap) or by
    a fast non-uniform fallback.
    """
    m, n, k = M.dims
    if k != n or m > n:
        raise ValueError(f"plane matching expects m x n x n dims with m <= n, got {M.dims}")
    if uniform not in ("exact", "fast"):
        raise ValueError("uniform must be 'exact' or 'fast'")
    if uniform == "exact" and n > PERMANENT_CAP:
        raise SizeCapError(f"exact uniform sampling needs n <= {PERMANENT_CAP}")
    if abort_check and n > PERMANENT_CAP:
        raise SizeCapError(f"abort check computes permanents; needs n <= {PERMANENT_CAP}")
    if delta is not None and not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    rng = _as_rng(seed, "planes")
    used = [0] * n  # symbols consumed per column
    entries: dict[tuple[int, int], int] = {}
    plane_stats = []
    stats: dict = {"planes": plane_stats, "backend": BACKEND}
    for i in range(m):
        plane = [M.shaft_mask(i, c) for c in range(n)]
        H = BipartiteGraph(n, [plane[c] & ~used[c] for c in range(n)])
        k_i = n - i
        density = sum(x.bit_count() for x in plane) / (n * n)
        p_i = density if p is None else p
        info: dict = {"plane": i, "k": k_i, "p": p_i}
        if abort_check:
            d_i = default_delta(n, p_i) if delta is None else delta
            L_i = (1.0 - d_i) * k_i * p_i
            floor_log = pm_count_lower_bound(n, L_i)
            per = permanent(H)
            info.update(
                {
                    "delta": d_i,
                    "L": L_i,
                    "floor_log": floor_log,
                    "log_permanent": math.log(per) if per > 0 else -math.inf,
                }
            )
            plane_stats.append(info)
            if per == 0:
                return FinderOutcome(
                    "aborted", stage=f"plane {i}", reason="no perfect matching", stats=stats
                )
            if math.log(per) < floor_log:
                return FinderOutcome(
                    "aborted",
                    stage=f"plane {i}",
                    reason="matching count below floor",
                    stats=stats,
                )
        else:
            plane_stats.append(info)
        try:
            pm = (
                UniformMatchingSampler(H).sample(rng)
                if uniform == "exact"
                else sample_pm_fast(H, rng)
            )
        except ValueError:
            return FinderOutcome(
                "aborted", stage=f"plane {i}", reason="no perfect matching", stats=stats
            )
        for c, v in pm.pairing.items():
            entries[(i, c)] = v
            used[c] |= 1 << v
    box = PartialLatinBox(m, n, n, entries)
    assert validate_latin_box(box, M, require_proper=True)
    return FinderOutcome("success", result=box, stats=stats)


@dataclass
class StagedParams:
    """Knobs of the staged construction.

    The asymptotic defaults at overshoot eps: degree_threshold is
    (eps/(1+eps)) ln n, the low-symbol menu size stands for ceil(ln ln n),
    and the high-symbol menu size for ceil((eps/(1+eps)) ln n); all floored
    at 1 because at desk scale these quantities are 1-3.
    """

    eps: float
    symbol_budget_low: int
    symbol_budget_high: int
    degree_threshold: float
    retries: int = 3

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.symbol_budget_low < 1 or self.symbol_budget_high < 1:
            raise ValueError("symbol budgets must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @classmethod
    def defaults(cls, n: int, eps: float = 0.5, retries: int = 3) -> "StagedParams":
        ln_n = math.log(n) if n >= 2 else 0.0
        lll = math.log(math.log(n)) if n >= 3 else 0.0
        frac = eps / (1.0 + eps)
        return cls(
            eps=eps,
            symbol_budget_low=max(1, math.ceil(lll)),
            symbol_budget_high=max(1, math.ceil(frac * ln_n)),
            degree_threshold=frac * ln_n,
            retries=retries,
        )


def _low_degree_sets(
    M: ColoredArray, threshold: float
) -> tuple[list[tuple[int, int]], set[tuple[int, int]]]:
    """S: green high-symbol degree below threshold; T: members of S whose
    green low-symbol degree is at most ln ln n."""
    n = M.n
    lll = math.log(math.log(n)) if n >= 2 and math.log(n) > 0 else -math.inf
    S = []
    T = set()
    for r in range(n):
        for c in range(n):
            g = M.green.shaft_mask(r, c)
            d_m = (g >> n).bit_count()
            if d_m < threshold:
                S.append((r, c))
                if g.bit_count() - d_m <= lll:
                    T.add((r, c))
    return S, T


def _build_B2_once(
    M: ColoredArray, params: StagedParams, rng: np.random.Generator
) -> tuple[Optional[PartialLatinBox], Optional[tuple[int, int]]]:
    n, m = M.n, M.m
    low_mask = (1 << n) - 1
    combined = M.combined()
    S, T = _low_degree_sets(M, params.degree_threshold)
    box = PartialLatinBox(n, n, m)
    # first pass: T gets one uniform symbol, low if the shaft has any
    for (r, c) in sorted(T):
        shaft = combined.shaft_mask(r, c)
        pool = list(_bits(shaft & low_mask)) or list(_bits(shaft & ~low_mask))
        if not pool:
            return None, (r, c)
        v = pool[int(rng.integers(len(pool)))]
        if box.conflicts(r, c, v):
            return None, (r, c)
        box.place(r, c, v)
    # second pass: random low-symbol menus over the rest of S
    for (r, c) in S:
        if (r, c) in T:
            continue
        opts = list(_bits(combined.shaft_mask(r, c) & low_mask))
        if not opts:
            return None, (r, c)
        size = min(params.symbol_budget_low, len(opts))
        menu = rng.choice(opts, size=size, replace=False)
        for v in menu:
            v = int(v)
            if not box.conflicts(r, c, v):
                box.place(r, c, v)
                break
        else:
            return None, (r, c)
    return box, None


def build_B2(
    M: ColoredArray, params: Optional[StagedParams] = None, seed: SeedLike = 0
) -> PartialLatinBox:
    """Cover every low-high-degree position of the green layer.

    T cells (few green low symbols too) get one uniform symbol each, low if
    possible; remaining S cells walk a random low-symbol menu, skipping
    symbols used in their row or column.  Collisions restart the build with
    fresh randomness up to ``params.retries`` times, then raise
    :class:`StageFailure` naming the blocking cell.
    """
    box, _ = _build_B2_with_stats(M, params, seed)
    return box


def _build_B2_with_stats(
    M: ColoredArray, params: Optional[StagedParams], seed: SeedLike
) -> tuple[PartialLatinBox, int]:
    params = StagedParams.defaults(M.n) if params is None else params
    last_cell = None
    for attempt in range(params.retries + 1):
        rng = _as_rng(seed, "B2", attempt)
        box, fail_cell = _build_B2_once(M, params, rng)
        if box is not None:
            return box, attempt
        last_cell = fail_cell
    raise StageFailure("B2", last_cell, params.retries + 1)


def find_staged(
    M: ColoredArray, params: Optional[StagedParams] = None, seed: SeedLike = 0
) -> FinderOutcome:
    """The full staged construction on a green/blue array.

    B2 covers the positions the greedy packing cannot be trusted with; B3 is
    a random greedy partial Latin square on the green low-symbol cube; B4
    overwrites B3 with B2 (erasing B3 entries colliding with B2 in row or
    column); the final stage covers everything left using random menus of
    high symbols.  Menu exhaustion in B2 or the final stage aborts after the
    retry budget.
    """
    n, m = M.n, M.m
    params = StagedParams.defaults(n) if params is None else params
    combined = M.combined()
    stats: dict = {"n": n, "m": m}
    try:
        b2, b2_attempts = _build_B2_with_stats(M, params, seed)
    except StageFailure as exc:
        return FinderOutcome(
            "aborted",
            stage="B2",
            reason=str(exc),
            stats={**stats, "b2_attempts": exc.attempts},
        )
    stats["b2_attempts"] = b2_attempts
    stats["b2_size"] = len(b2.entries)

    low_mask = (1 << n) - 1
    low_cube = Array3D(n, n, n, [g & low_mask for g in M.green.shafts])
    b3 = greedy_pack(hypergraph_from_array(low_cube), _as_rng(seed, "B3")).to_partial_latin_box()
    stats["b3_size"] = len(b3.entries)

    b4 = PartialLatinBox(n, n, m)
    for (r, c), v in sorted(b2.entries.items()):
        b4.place(r, c, v)
    erased = 0
    for (r, c), v in sorted(b3.entries.items()):
        if (r, c) in b4.entries or b4.conflicts(r, c, v):
            erased += 1
            continue
        b4.place(r, c, v)
    stats["b3_erased"] = erased
    stats["b4_size"] = len(b4.entries)

    uncovered = [
        (r, c) for r in range(n) for c in range(n) if (r, c) not in b4.entries
    ]
    stats["final_cells"] = len(uncovered)
    fail_cell = None
    for attempt in range(params.retries + 1):
        rng = _as_rng(seed, "final", attempt)
        box = b4.copy()
        fail_cell = None
        for (r, c) in uncovered:
            opts = list(_bits(combined.shaft_mask(r, c) >> n))
            if not opts:
                fail_cell = (r, c)
                break
            size = min(params.symbol_budget_high, len(opts))
            menu = rng.choice(opts, size=size, replace=False)
            for v in menu:
                v = int(v) + n
                if not box.conflicts(r, c, v):
                    box.place(r, c, v)
                    break
            else:
                fail_cell = (r, c)
                break
        if fail_cell is None:
            stats["final_attempts"] = attempt
            assert validate_latin_box(box, combined, require_proper=True)
            return FinderOutcome("success", result=box, stats=stats)
    stats["final_attempts"] = params.retries + 1
    return FinderOutcome(
        "aborted",
        stage="final",
        reason=f"high-symbol menu exhausted at cell {fail_cell}",
        stats=stats,
    )
