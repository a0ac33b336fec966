"""Pure-Python kernels: exact 0-1 permanent and exact Latin-box search.

Same contracts as the compiled extension; used as the fallback backend.
Matrices and shaft families are passed as bitmask ints, one per row/shaft.
"""

from __future__ import annotations

from typing import Optional, Sequence

__all__ = ["BACKEND", "ryser_permanent", "exact_search"]

BACKEND = "pure"


def _filter_line(cells: list[int], dom: list[int]) -> Optional[list[int]]:
    """All-different filtering for one line (row or column) of cells.

    Each cell must take a distinct symbol from its domain bitmask.  Finds a
    maximum matching; if it does not cover every cell the line is
    infeasible.  Otherwise removes every domain value that lies in no
    maximum matching: a non-matching edge survives only on an alternating
    cycle (same strongly connected component) or on an alternating path
    from an unmatched symbol.

    Mutates dom in place.  Returns None for infeasible, else the list of
    cells whose domains shrank.
    """
    nc = len(cells)
    if nc <= 1:
        return []
    mcell = [-1] * nc          # cell slot -> matched value
    mval: dict[int, int] = {}  # value -> cell slot

    def augment(i: int, seen: int) -> tuple[bool, int]:
        av = dom[cells[i]]
        rem = av & ~seen
        while rem:
            v = (rem & -rem).bit_length() - 1
            rem &= rem - 1
            seen |= 1 << v
            j = mval.get(v, -1)
            if j < 0:
                mcell[i] = v
                mval[v] = i
                return True, seen
            ok, seen = augment(j, seen)
            if ok:
                mcell[i] = v
                mval[v] = i
                return True, seen
            rem &= ~seen
        return False, seen

    for i in range(nc):
        ok, _ = augment(i, 0)
        if not ok:
            return None

    # vertices: cell slots 0..nc-1, value v as nc+v.  Arcs: matched edge
    # cell -> value, non-matched edge value -> cell.
    union = 0
    for i in range(nc):
        union |= dom[cells[i]]
    values = []
    rem = union
    while rem:
        v = (rem & -rem).bit_length() - 1
        rem &= rem - 1
        values.append(v)
    free = [v for v in values if v not in mval]

    def successors(x: int) -> list[int]:
        if x < nc:
            return [nc + mcell[x]]
        v = x - nc
        out = []
        for i in range(nc):
            if (dom[cells[i]] >> v) & 1 and mcell[i] != v:
                out.append(i)
        return out

    # reachability from free values along the arcs
    reach: set[int] = set()
    stack = [nc + v for v in free]
    while stack:
        x = stack.pop()
        if x in reach:
            continue
        reach.add(x)
        stack.extend(successors(x))

    # Tarjan SCC, iterative
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    on_stack: set[int] = set()
    sstack: list[int] = []
    counter = 0
    ncomp = 0
    verts = list(range(nc)) + [nc + v for v in values]
    for root in verts:
        if root in index:
            continue
        work = [(root, 0, successors(root))]
        while work:
            x, pos, succ = work[-1]
            if pos == 0:
                index[x] = low[x] = counter
                counter += 1
                sstack.append(x)
                on_stack.add(x)
            advanced = False
            while pos < len(succ):
                y = succ[pos]
                pos += 1
                if y not in index:
                    work[-1] = (x, pos, succ)
                    work.append((y, 0, successors(y)))
                    advanced = True
                    break
                if y in on_stack:
                    low[x] = min(low[x], index[y])
            if advanced:
                continue
            if low[x] == index[x]:
                while True:
                    y = sstack.pop()
                    on_stack.discard(y)
                    comp[y] = ncomp
                    if y == x:
                        break
                ncomp += 1
            work.pop()
            if work:
                px = work[-1][0]
                low[px] = min(low[px], low[x])

    removed = []
    for i in range(nc):
        av = dom[cells[i]]
        keep = 1 << mcell[i]
        rem = av & ~keep
        while rem:
            v = (rem & -rem).bit_length() - 1
            rem &= rem - 1
            if comp[i] == comp[nc + v] or (nc + v) in reach:
                keep |= 1 << v
        if keep != av:
            dom[cells[i]] = keep
            removed.append(cells[i])
    return removed

# exact_search return codes
FOUND = 1
EXHAUSTED = 0
CAP_HIT = 2


def ryser_permanent(rows: Sequence[int], n: int) -> int:
    """Permanent of the n x n 0-1 matrix whose row i has column bitmask rows[i].

    Inclusion-exclusion over column subsets in Gray-code order, so each step
    adjusts one column's contribution to the row sums.
    """
    if n == 0:
        return 1
    cols = [0] * n
    for i in range(n):
        mask = rows[i]
        while mask:
            j = (mask & -mask).bit_length() - 1
            cols[j] |= 1 << i
            mask &= mask - 1
    sums = [0] * n
    total = 0
    sign = 1
    for t in range(1, 1 << n):
        j = (t & -t).bit_length() - 1
        delta = 1 if ((t ^ (t >> 1)) >> j) & 1 else -1
        mask = cols[j]
        while mask:
            i = (mask & -mask).bit_length() - 1
            sums[i] += delta
            mask &= mask - 1
        sign = -sign
        prod = 1
        for x in sums:
            if x == 0:
                prod = 0
                break
            prod *= x
        if prod:
            total += prod if sign > 0 else -prod
    return total if n % 2 == 0 else -total


def exact_search(
    m: int,
    n: int,
    k: int,
    shafts: Sequence[int],
    count_mode: bool = False,
    node_cap: int = 0,
    mrv: bool = True,
) -> tuple[int, Optional[object], int]:
    """Depth-first search for Latin boxes supported by an m x n x k array.

    Each cell (r, c) must get a symbol from its shaft mask that is unused in
    row r and column c.  With ``mrv`` the branching cell is always one with
    the fewest live candidates, otherwise the first uncovered cell in
    row-major order; symbols are tried in ascending order, so the search is
    deterministic either way.  A node is one attempted placement.

    Returns (code, payload, nodes): code FOUND with an assignment list
    (symbol per cell, row-major), EXHAUSTED with the completion count when
    ``count_mode`` (else None), or CAP_HIT once nodes exceed a positive
    ``node_cap``.
    """
    size = m * n
    if size == 0:
        return (EXHAUSTED, 1, 0) if count_mode else (FOUND, [], 0)
    row_used = [0] * m
    col_used = [0] * n
    assign = [-1] * size
    nodes = 0
    count = 0

    def pick_raw() -> tuple[int, int]:
        for s in range(size):
            if assign[s] < 0:
                r, c = divmod(s, n)
                return s, shafts[s] & ~row_used[r] & ~col_used[c]
        return 0, 0

    # mrv mode keeps, per search depth, the domains of all open cells
    # filtered to the fixpoint of every line constraint.  A child state
    # starts from its parent's fixpoint (sound: any value a parent line
    # filter removed stays removable after one more placement), applies the
    # placement, and re-filters only from the lines it dirtied; the
    # propagation worklist then reaches the same fixpoint a full recompute
    # from raw availability would.  Line ids: rows 0..m-1, cols m..m+n-1.
    dom_stack: list[Optional[list[int]]] = [None] * (size + 1)

    def propagate(dom: list[int], seeds: list[int]) -> int:
        # Runs line filters until stable.  Returns -1, or a dead cell.
        row_cells: list[list[int]] = [[] for _ in range(m)]
        col_cells: list[list[int]] = [[] for _ in range(n)]
        for s in range(size):
            if assign[s] < 0:
                r, c = divmod(s, n)
                row_cells[r].append(s)
                col_cells[c].append(s)
        queued = [False] * (m + n)
        queue = []
        for line in seeds:
            if not queued[line]:
                queued[line] = True
                queue.append(line)
        qi = 0
        while qi < len(queue):
            line = queue[qi]
            qi += 1
            queued[line] = False
            cells = row_cells[line] if line < m else col_cells[line - m]
            changed = _filter_line(cells, dom)
            if changed is None:
                return cells[0] if cells else 0
            for s in changed:
                if dom[s] == 0:
                    return s
                other = m + (s % n) if line < m else s // n
                if not queued[other]:
                    queued[other] = True
                    queue.append(other)
        return -1

    def select(dom: list[int]) -> tuple[int, int]:
        best_s, best_av, best_cnt = -1, 0, k + 1
        for s in range(size):
            if assign[s] >= 0:
                continue
            cnt = dom[s].bit_count()
            if cnt < best_cnt:
                best_s, best_av, best_cnt = s, dom[s], cnt
                if cnt == 1:
                    break
        return best_s, best_av

    def pick_root() -> tuple[int, int]:
        dom = [0] * size
        for s in range(size):
            r, c = divmod(s, n)
            av = shafts[s] & ~row_used[r] & ~col_used[c]
            if av == 0:
                return s, 0
            dom[s] = av
        dead = propagate(dom, list(range(m + n)))
        if dead >= 0:
            return dead, 0
        dom_stack[0] = dom
        return select(dom)

    def pick_child(depth: int, s0: int, v: int) -> tuple[int, int]:
        parent = dom_stack[depth - 1]
        assert parent is not None
        dom = list(parent)
        dom[s0] = 0
        r0, c0 = divmod(s0, n)
        seeds = [r0, m + c0]
        bit = 1 << v
        for c in range(n):
            s = r0 * n + c
            if assign[s] < 0 and dom[s] & bit:
                dom[s] &= ~bit
                if dom[s] == 0:
                    return s, 0
                seeds.append(m + c)
        for r in range(m):
            s = r * n + c0
            if assign[s] < 0 and dom[s] & bit:
                dom[s] &= ~bit
                if dom[s] == 0:
                    return s, 0
                seeds.append(r)
        dead = propagate(dom, seeds)
        if dead >= 0:
            return dead, 0
        dom_stack[depth] = dom
        return select(dom)

    placed = 0
    stack = [list(pick_root() if mrv else pick_raw())]
    while stack:
        frame = stack[-1]
        s = frame[0]
        if assign[s] >= 0:
            v = assign[s]
            assign[s] = -1
            placed -= 1
            r, c = divmod(s, n)
            row_used[r] &= ~(1 << v)
            col_used[c] &= ~(1 << v)
        rem = frame[1]
        if rem == 0:
            stack.pop()
            continue
        v = (rem & -rem).bit_length() - 1
        frame[1] = rem & (rem - 1)
        nodes += 1
        if node_cap and nodes > node_cap:
            return CAP_HIT, (count if count_mode else None), nodes
        assign[s] = v
        placed += 1
        r, c = divmod(s, n)
        row_used[r] |= 1 << v
        col_used[c] |= 1 << v
        if placed == size:
            if not count_mode:
                return FOUND, list(assign), nodes
            count += 1
            continue
        stack.append(
            list(pick_child(len(stack), s, v) if mrv else pick_raw())
        )
    return EXHAUSTED, (count if count_mode else None), nodes
