"""Bipartite matching kernel: maximum matchings, exact permanents, uniform
perfect-matching sampling, degree-constrained factors, and pseudorandomness
audits.

Graphs are balanced bipartite on n + n vertices with the biadjacency matrix
stored as one column bitmask per row.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .arrays import Array3D
from .errors import SizeCapError
from .kernels import PERMANENT_CAP, permanent_bitmask
from .rng import randbelow, substream

__all__ = [
    "BipartiteGraph",
    "Matching",
    "AuditReport",
    "max_matching",
    "permanent",
    "UniformMatchingSampler",
    "sample_uniform_pm",
    "sample_pm_fast",
    "random_subgraph",
    "random_regular_bipartite",
    "has_L_factor",
    "l_factor_witness",
    "l_factor_hall_oracle",
    "pseudorandom_audit",
    "pm_count_lower_bound",
    "default_delta",
]

SeedLike = Union[int, np.random.Generator]

# memoized-permanent sampling is worthwhile while 2^n states stay small
_MEMO_CAP = 16


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(int(seed))


class BipartiteGraph:
    """Balanced bipartite graph; ``adj[r]`` is the column bitmask of row r."""

    __slots__ = ("n", "adj", "row_deg", "col_deg")

    def __init__(self, n: int, adj: Sequence[int]):
        if n < 1:
            raise ValueError("n must be positive")
        if len(adj) != n:
            raise ValueError("adjacency length does not match n")
        full = (1 << n) - 1
        if any(a < 0 or a > full for a in adj):
            raise ValueError("adjacency mask out of range")
        self.n = n
        self.adj = tuple(int(a) for a in adj)
        self.row_deg = tuple(a.bit_count() for a in self.adj)
        cols = [0] * n
        for r, a in enumerate(self.adj):
            while a:
                c = (a & -a).bit_length() - 1
                cols[c] |= 1 << r
                a &= a - 1
        self.col_deg = tuple(m.bit_count() for m in cols)

    # -- constructors --------------------------------------------------

    @classmethod
    def complete(cls, n: int) -> "BipartiteGraph":
        return cls(n, [(1 << n) - 1] * n)

    @classmethod
    def identity(cls, n: int) -> "BipartiteGraph":
        return cls(n, [1 << i for i in range(n)])

    @classmethod
    def from_edges(cls, n: int, edges: Iterator[tuple[int, int]]) -> "BipartiteGraph":
        adj = [0] * n
        for r, c in edges:
            if not (0 <= r < n and 0 <= c < n):
                raise ValueError(f"edge ({r},{c}) out of bounds")
            adj[r] |= 1 << c
        return cls(n, adj)

    # -- queries ---------------------------------------------------------

    @property
    def edge_count(self) -> int:
        return sum(self.row_deg)

    def has_edge(self, r: int, c: int) -> bool:
        return bool((self.adj[r] >> c) & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        for r, a in enumerate(self.adj):
            while a:
                c = (a & -a).bit_length() - 1
                yield (r, c)
                a &= a - 1

    def column_masks(self) -> list[int]:
        cols = [0] * self.n
        for r, a in enumerate(self.adj):
            while a:
                c = (a & -a).bit_length() - 1
                cols[c] |= 1 << r
                a &= a - 1
        return cols

    def regularity(self) -> Optional[int]:
        """The common degree k if the graph is k-regular, else None."""
        k = self.row_deg[0]
        if all(d == k for d in self.row_deg) and all(d == k for d in self.col_deg):
            return k
        return None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BipartiteGraph) and self.n == other.n and self.adj == other.adj

    def __hash__(self):
        return hash((self.n, self.adj))

    def __repr__(self) -> str:
        return f"BipartiteGraph(n={self.n}, edges={self.edge_count})"

    # -- serialization (shared with Array3D, k=1 slice convention) -------

    def to_array3d(self) -> Array3D:
        return Array3D(self.n, self.n, 1, list(self.adj_bits()))

    def adj_bits(self) -> Iterator[int]:
        for r in range(self.n):
            for c in range(self.n):
                yield (self.adj[r] >> c) & 1

    @classmethod
    def from_array3d(cls, arr: Array3D) -> "BipartiteGraph":
        if arr.k != 1 or arr.m != arr.n:
            raise ValueError("expected an n x n x 1 array")
        n = arr.n
        adj = [0] * n
        for r, c, _ in arr.cells():
            adj[r] |= 1 << c
        return cls(n, adj)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": [[r + 1, c + 1] for r, c in self.edges()]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BipartiteGraph":
        return cls.from_edges(d["n"], ((r - 1, c - 1) for r, c in d["edges"]))

    def to_bytes(self) -> bytes:
        return self.to_array3d().to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BipartiteGraph":
        return cls.from_array3d(Array3D.from_bytes(data))


@dataclass
class Matching:
    """A partial injection row -> column."""

    pairing: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        cols = list(self.pairing.values())
        if len(set(cols)) != len(cols):
            raise ValueError("pairing is not injective")

    @property
    def size(self) -> int:
        return len(self.pairing)

    def is_perfect(self, n: int) -> bool:
        return self.size == n

    def as_permutation(self, n: int) -> list[int]:
        """Column of each row, -1 where unmatched."""
        out = [-1] * n
        for r, c in self.pairing.items():
            out[r] = c
        return out

    def cells(self) -> list[tuple[int, int]]:
        return sorted(self.pairing.items())


def max_matching(G: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching by Hopcroft-Karp."""
    n = G.n
    INF = n + 1
    match_u = [-1] * n
    match_v = [-1] * n
    dist = [0] * n

    def bfs() -> bool:
        queue = deque()
        for u in range(n):
            if match_u[u] < 0:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = INF
        found = False
        while queue:
            u = queue.popleft()
            a = G.adj[u]
            while a:
                v = (a & -a).bit_length() - 1
                a &= a - 1
                w = match_v[v]
                if w < 0:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        a = G.adj[u]
        while a:
            v = (a & -a).bit_length() - 1
            a &= a - 1
            w = match_v[v]
            if w < 0 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_u[u] = v
                match_v[v] = u
                return True
        dist[u] = INF
        return False

    while bfs():
        for u in range(n):
            if match_u[u] < 0:
                dfs(u)
    return Matching({u: match_u[u] for u in range(n) if match_u[u] >= 0})


def permanent(G: BipartiteGraph) -> int:
    """Exact number of perfect matchings (n <= 24)."""
    return permanent_bitmask(G.adj, G.n)


class UniformMatchingSampler:
    """Draws exactly uniform perfect matchings by sequential row assignment.

    Row r gets column c with probability Per(G with r->c fixed)/Per(rest);
    the ratios are exact integers, and the column pick uses integer rejection
    sampling, so the distribution is exactly uniform.  Subpermanents are
    memoized per instance for small n, making repeated draws cheap.
    """

    def __init__(self, G: BipartiteGraph):
        if G.n > PERMANENT_CAP:
            raise SizeCapError(f"uniform sampling needs n <= {PERMANENT_CAP}")
        self.G = G
        self._memo: Optional[dict[tuple[int, int], int]] = {} if G.n <= _MEMO_CAP else None
        self.total = self._count(0, (1 << G.n) - 1)
        if self.total == 0:
            raise ValueError("graph has no perfect matching")

    def _count(self, r: int, free: int) -> int:
        n = self.G.n
        if r == n:
            return 1
        if self._memo is not None:
            hit = self._memo.get((r, free))
            if hit is not None:
                return hit
            acc = 0
            a = self.G.adj[r] & free
            while a:
                bit = a & -a
                a ^= bit
                acc += self._count(r + 1, free ^ bit)
            self._memo[(r, free)] = acc
            return acc
        # large n: permanent of the remaining rows on the free columns
        cols = []
        f = free
        while f:
            bit = f & -f
            f ^= bit
            cols.append(bit.bit_length() - 1)
        sub = [
            sum(((self.G.adj[i] >> c) & 1) << j for j, c in enumerate(cols))
            for i in range(r, n)
        ]
        return permanent_bitmask(sub, len(sub))

    def sample(self, rng: np.random.Generator) -> Matching:
        n = self.G.n
        free = (1 << n) - 1
        pairing = {}
        for r in range(n):
            weights = []
            a = self.G.adj[r] & free
            while a:
                bit = a & -a
                a ^= bit
                w = self._count(r + 1, free ^ bit)
                if w:
                    weights.append((bit.bit_length() - 1, w))
            total = sum(w for _, w in weights)
            u = randbelow(rng, total)
            for c, w in weights:
                if u < w:
                    break
                u -= w
            pairing[r] = c
            free ^= 1 << c
        return Matching(pairing)


def sample_uniform_pm(G: BipartiteGraph, seed: SeedLike) -> Matching:
    """One exactly uniform perfect matching of G."""
    return UniformMatchingSampler(G).sample(_as_rng(seed))


def sample_pm_fast(G: BipartiteGraph, seed: SeedLike) -> Matching:
    """Some perfect matching, fast but NOT uniform: randomized greedy plus
    augmenting paths (Kuhn, which is complete).  Fallback for n beyond the
    permanent cap.
    """
    rng = _as_rng(seed)
    n = G.n
    match_u = [-1] * n
    match_v = [-1] * n
    rows = list(rng.permutation(n))
    for u in rows:
        opts = [c for c in _bits(G.adj[u]) if match_v[c] < 0]
        if opts:
            c = opts[int(rng.integers(len(opts)))]
            match_u[u], match_v[c] = c, u

    def augment(u: int, seen: list[bool]) -> bool:
        order = list(_bits(G.adj[u]))
        rng.shuffle(order)
        for v in order:
            if seen[v]:
                continue
            seen[v] = True
            if match_v[v] < 0 or augment(match_v[v], seen):
                match_u[u] = v
                match_v[v] = u
                return True
        return False

    for u in rows:
        if match_u[u] < 0 and not augment(u, [False] * n):
            raise ValueError("graph has no perfect matching")
    return Matching({u: match_u[u] for u in range(n)})


def _bits(mask: int) -> Iterator[int]:
    while mask:
        yield (mask & -mask).bit_length() - 1
        mask &= mask - 1


def random_subgraph(G: BipartiteGraph, p: float, seed: SeedLike) -> BipartiteGraph:
    """Keep each edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = _as_rng(seed)
    adj = []
    for r in range(G.n):
        row = 0
        for c in _bits(G.adj[r]):
            if rng.random() < p:
                row |= 1 << c
        adj.append(row)
    return BipartiteGraph(G.n, adj)


def random_regular_bipartite(n: int, k: int, seed: SeedLike) -> BipartiteGraph:
    """A random k-regular bipartite graph: union of k disjoint perfect
    matchings drawn sequentially from the shrinking complete graph.
    """
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    rng = _as_rng(seed)
    adj = [0] * n
    for i in range(k):
        avail = BipartiteGraph(n, [((1 << n) - 1) ^ a for a in adj])
        pm = (
            sample_uniform_pm(avail, rng)
            if n <= PERMANENT_CAP
            else sample_pm_fast(avail, rng)
        )
        for r, c in pm.pairing.items():
            adj[r] |= 1 << c
    return BipartiteGraph(n, adj)


# -- degree-constrained factors ---------------------------------------------


def l_factor_witness(G: BipartiteGraph, L: int) -> Optional[BipartiteGraph]:
    """An L-regular spanning subgraph of G, or None.

    Max-flow on source -> rows (capacity L) -> edges (capacity 1) ->
    columns -> sink (capacity L); a factor exists iff the flow saturates at
    n*L, and the saturated middle edges are the witness.
    """
    if not 0 <= L <= G.n:
        raise ValueError("need 0 <= L <= n")
    n = G.n
    if L == 0:
        return BipartiteGraph(n, [0] * n)
    if min(min(G.row_deg), min(G.col_deg)) < L:
        return None
    src, snk = 2 * n, 2 * n + 1
    graph: list[list[list[int]]] = [[] for _ in range(2 * n + 2)]  # [to, cap, rev]

    def add_edge(a: int, b: int, cap: int) -> None:
        graph[a].append([b, cap, len(graph[b])])
        graph[b].append([a, 0, len(graph[a]) - 1])

    for u in range(n):
        add_edge(src, u, L)
        add_edge(n + u, snk, L)
    edge_refs = {}
    for r, c in G.edges():
        edge_refs[(r, c)] = (r, len(graph[r]))
        add_edge(r, n + c, 1)

    def bfs_levels() -> Optional[list[int]]:
        level = [-1] * len(graph)
        level[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for to, cap, _ in graph[u]:
                if cap > 0 and level[to] < 0:
                    level[to] = level[u] + 1
                    queue.append(to)
        return level if level[snk] >= 0 else None

    def dfs_push(u: int, pushed: int, level: list[int], it: list[int]) -> int:
        if u == snk:
            return pushed
        while it[u] < len(graph[u]):
            e = graph[u][it[u]]
            to, cap, rev = e
            if cap > 0 and level[to] == level[u] + 1:
                got = dfs_push(to, min(pushed, cap), level, it)
                if got:
                    e[1] -= got
                    graph[to][rev][1] += got
                    return got
            it[u] += 1
        return 0

    flow = 0
    while True:
        level = bfs_levels()
        if level is None:
            break
        it = [0] * len(graph)
        while True:
            pushed = dfs_push(src, n * L, level, it)
            if not pushed:
                break
            flow += pushed
    if flow != n * L:
        return None
    adj = [0] * n
    for (r, c), (node, idx) in edge_refs.items():
        if graph[node][idx][1] == 0:  # middle edge saturated
            adj[r] |= 1 << c
    return BipartiteGraph(n, adj)


def has_L_factor(G: BipartiteGraph, L: int) -> bool:
    """Does G contain an L-regular spanning subgraph?"""
    return l_factor_witness(G, L) is not None


def l_factor_hall_oracle(G: BipartiteGraph, L: int) -> bool:
    """Brute-force Hall-type test: an L-factor exists iff for every X over
    rows and Y over columns, e(U-X, V-Y) >= L(n - |X| - |Y|).  Exponential;
    n <= 6 only.
    """
    n = G.n
    if n > 6:
        raise SizeCapError("Hall oracle is exhaustive; n <= 6 only")
    if not 0 <= L <= n:
        raise ValueError("need 0 <= L <= n")
    full = (1 << n) - 1
    for x_mask in range(1 << n):
        keep_rows = full ^ x_mask
        col_counts = [0] * n
        for r in _bits(keep_rows):
            for c in _bits(G.adj[r]):
                col_counts[c] += 1
        size_x = x_mask.bit_count()
        # the adversarial Y of each size removes the largest column counts
        ordered = sorted(col_counts, reverse=True)
        e_min = sum(col_counts)
        for size_y in range(n + 1):
            if e_min < L * (n - size_x - size_y):
                return False
            if size_y < n:
                e_min -= ordered[size_y]
    return True


# -- pseudorandomness audit ---------------------------------------------------


@dataclass
class AuditReport:
    is_violation_found: bool
    worst_pair: Optional[tuple[tuple[int, ...], tuple[int, ...]]]
    worst_ratio: float
    pairs_checked: int
    mode: str
    threshold: float
    # annotation echoed from the caller; never consulted by the audit
    guarantee_constant: float = 1.0


def pseudorandom_audit(
    G: BipartiteGraph,
    c: float,
    eps: float,
    mode: str = "sampled",
    budget: int = 10_000,
    seed: SeedLike = 0,
    guarantee_constant: float = 1.0,
) -> AuditReport:
    """Check the c-pseudorandomness condition on a k-regular graph.

    Over row sets X and column sets Y with |X|, |Y| >= (eps/10) n, the edge
    count E(X, Y) should be at least (1-c) |X||Y| k/n.  Reports the minimum
    of E(X,Y) n / (|X||Y| k); a violation is a pair below 1 - c.

    Exact mode scans every X and, per X, the adversarial Y of each size via
    sorted column-sum prefixes (n <= 20).  Sampled mode tries ``budget``
    random qualifying pairs.

    ``guarantee_constant`` is carried into the report verbatim so callers can
    annotate which downstream guarantee they audited for; it plays no role in
    the decision.
    """
    k = G.regularity()
    if k is None:
        raise ValueError("pseudorandomness is defined for k-regular graphs")
    if k == 0:
        raise ValueError("positive regularity required")
    n = G.n
    smin = max(1, math.ceil((eps / 10.0) * n))
    cols = G.column_masks()

    worst_ratio = math.inf
    worst_pair: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
    checked = 0

    def ratio_of(x_mask: int, y_list: Sequence[int], colsum: Sequence[int]) -> float:
        e = sum(colsum[v] for v in y_list)
        x_size = x_mask.bit_count()
        return e * n / (x_size * len(y_list) * k)

    if mode == "exact":
        if n > 20:
            raise SizeCapError("exact audit is O(2^n poly); n <= 20 only")
        for x_mask in range(1, 1 << n):
            if x_mask.bit_count() < smin:
                continue
            colsum = [(cols[v] & x_mask).bit_count() for v in range(n)]
            order = sorted(range(n), key=lambda v: (colsum[v], v))
            prefix = 0
            x_size = x_mask.bit_count()
            for t, v in enumerate(order, start=1):
                prefix += colsum[v]
                if t < smin:
                    continue
                checked += 1
                ratio = prefix * n / (x_size * t * k)
                if ratio < worst_ratio:
                    worst_ratio = ratio
                    worst_pair = (
                        tuple(_bits(x_mask)),
                        tuple(sorted(order[:t])),
                    )
    elif mode == "sampled":
        rng = _as_rng(seed)
        for _ in range(budget):
            xs = int(rng.integers(smin, n + 1))
            ys = int(rng.integers(smin, n + 1))
            x_list = rng.choice(n, size=xs, replace=False)
            y_list = rng.choice(n, size=ys, replace=False)
            x_mask = 0
            for r in x_list:
                x_mask |= 1 << int(r)
            colsum = [(cols[v] & x_mask).bit_count() for v in range(n)]
            checked += 1
            ratio = ratio_of(x_mask, [int(v) for v in y_list], colsum)
            if ratio < worst_ratio:
                worst_ratio = ratio
                worst_pair = (
                    tuple(sorted(int(r) for r in x_list)),
                    tuple(sorted(int(v) for v in y_list)),
                )
    else:
        raise ValueError("mode must be 'exact' or 'sampled'")

    threshold = 1.0 - c
    return AuditReport(
        is_violation_found=worst_ratio < threshold,
        worst_pair=worst_pair,
        worst_ratio=worst_ratio,
        pairs_checked=checked,
        mode=mode,
        threshold=threshold,
        guarantee_constant=guarantee_constant,
    )


def pm_count_lower_bound(n: int, L: float) -> float:
    """ln of the guaranteed perfect-matching count L^n n!/n^n of an
    L-regular-or-denser graph; -inf at L = 0.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    if L == 0:
        return -math.inf
    return n * math.log(L) + math.lgamma(n + 1) - n * math.log(n)


def default_delta(n: int, p: float) -> float:
    """The slack max(f^{-1/3}, 1/n) with f = p n / ln n, clamped into (0, 1).

    Degenerate regimes (p = 0, n <= 2) collapse to the 0.999 cap; callers
    outside the dense well-behaved regime should pass their own delta.
    """
    if n < 2:
        return 0.5
    f = p * n / math.log(n)
    if f <= 0:
        return 0.999
    return min(max(f ** (-1.0 / 3.0), 1.0 / n), 0.999)
