# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: exact 0-1 permanent and exact Latin-box search.

Same contracts and identical outputs as _kernels_py; the dispatcher picks
this module up automatically when the extension was built.  The permanent
accumulates in 128-bit integers (exact through n = 24); the search packs
symbol sets into 64-bit masks (k <= 64).
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.string cimport memcpy

cdef extern from *:
    ctypedef long long i128 "__int128"
    ctypedef unsigned long long u128 "unsigned __int128"
    int __builtin_ctzll(unsigned long long)
    int __builtin_popcountll(unsigned long long)

ctypedef unsigned long long u64

BACKEND = "compiled"

FOUND = 1
EXHAUSTED = 0
CAP_HIT = 2


cdef object _i128_to_py(i128 v):
    cdef bint neg = v < 0
    cdef u128 u = <u128>(-v) if neg else <u128>v
    cdef u64 hi = <u64>(u >> 64)
    cdef u64 lo = <u64>u
    out = (int(hi) << 64) | int(lo)
    return -out if neg else out


def ryser_permanent(rows, int n):
    """Permanent of the n x n 0-1 matrix whose row i has column bitmask
    rows[i].  Inclusion-exclusion over column subsets in Gray-code order."""
    if n == 0:
        return 1
    if n > 24:
        raise ValueError("compiled permanent kernel is sized for n <= 24")
    cdef u64 cols[24]
    cdef i128 sums[24]
    cdef int i, j
    cdef u64 mask
    for j in range(n):
        cols[j] = 0
        sums[j] = 0
    for i in range(n):
        mask = <u64>rows[i]
        while mask:
            j = __builtin_ctzll(mask)
            cols[j] |= (<u64>1) << i
            mask &= mask - 1

    cdef i128 total = 0
    cdef i128 prod
    cdef int sign = 1
    cdef int delta
    cdef u64 t, gray
    cdef u64 top = (<u64>1) << n
    for t in range(1, top):
        j = __builtin_ctzll(t)
        gray = t ^ (t >> 1)
        delta = 1 if (gray >> j) & 1 else -1
        mask = cols[j]
        while mask:
            i = __builtin_ctzll(mask)
            sums[i] += delta
            mask &= mask - 1
        sign = -sign
        prod = 1
        for i in range(n):
            if sums[i] == 0:
                prod = 0
                break
            prod *= sums[i]
        if prod != 0:
            total += prod if sign > 0 else -prod
    if n % 2 != 0:
        total = -total
    return _i128_to_py(total)


cdef int _augment(int i, u64 *seen, int *cells, u64 *dom,
                  int *mcell, int *mval) noexcept:
    # Kuhn augmenting step for one line; seen is the visited-value mask.
    cdef u64 rem = dom[cells[i]] & ~seen[0]
    cdef int v, j
    while rem:
        v = __builtin_ctzll(rem)
        rem &= rem - 1
        seen[0] |= (<u64>1) << v
        j = mval[v]
        if j < 0:
            mcell[i] = v
            mval[v] = i
            return 1
        if _augment(j, seen, cells, dom, mcell, mval):
            mcell[i] = v
            mval[v] = i
            return 1
        rem &= ~seen[0]
    return 0


cdef int _filter_line(int *cells, int nc, u64 *dom, int *mcell, int *mval,
                      int *t_index, int *t_low, int *t_comp, int *t_on,
                      int *t_sstack, int *t_work_x, int *t_work_pos,
                      int *reach_flag, int *reach_stack,
                      int *changed) noexcept:
    # All-different filtering for one line: maximum matching for
    # feasibility, then drop every value in no maximum matching (kept only
    # on an alternating cycle, i.e. same SCC, or on an alternating path
    # from an unmatched value).  Vertices: cell slots 0..nc-1, value v as
    # nc+v.  Arcs: matched edge cell -> value, non-matched value -> cell.
    # Returns -1 for infeasible, else the count of cells written to
    # changed[] whose domains shrank.
    cdef int i, v, j, x, y, pos, root, sp, wp, counter, ncomp, nch
    cdef int advanced
    cdef u64 seen, union_mask, rem, av, keep
    if nc <= 1:
        return 0
    for i in range(nc):
        mcell[i] = -1
    for v in range(64):
        mval[v] = -1
    for i in range(nc):
        seen = 0
        if not _augment(i, &seen, cells, dom, mcell, mval):
            return -1

    union_mask = 0
    for i in range(nc):
        union_mask |= dom[cells[i]]

    # reachability from unmatched values (mark on push; same reach set)
    for i in range(nc + 64):
        reach_flag[i] = 0
    sp = 0
    rem = union_mask
    while rem:
        v = __builtin_ctzll(rem)
        rem &= rem - 1
        if mval[v] < 0:
            reach_flag[nc + v] = 1
            reach_stack[sp] = nc + v
            sp += 1
    while sp > 0:
        sp -= 1
        x = reach_stack[sp]
        if x < nc:
            y = nc + mcell[x]
            if not reach_flag[y]:
                reach_flag[y] = 1
                reach_stack[sp] = y
                sp += 1
        else:
            v = x - nc
            for i in range(nc):
                if (dom[cells[i]] >> v) & 1 and mcell[i] != v and not reach_flag[i]:
                    reach_flag[i] = 1
                    reach_stack[sp] = i
                    sp += 1

    # Tarjan SCC, iterative with explicit work frames (vertex, next pos)
    for i in range(nc + 64):
        t_index[i] = -1
        t_on[i] = 0
    counter = 0
    ncomp = 0
    sp = 0
    for root in range(nc + 64):
        if root >= nc and not (union_mask >> (root - nc)) & 1:
            continue
        if t_index[root] >= 0:
            continue
        t_work_x[0] = root
        t_work_pos[0] = 0
        wp = 1
        while wp > 0:
            x = t_work_x[wp - 1]
            pos = t_work_pos[wp - 1]
            if pos == 0:
                t_index[x] = counter
                t_low[x] = counter
                counter += 1
                t_sstack[sp] = x
                sp += 1
                t_on[x] = 1
            advanced = 0
            if x < nc:
                if pos < 1:
                    pos = 1
                    y = nc + mcell[x]
                    if t_index[y] < 0:
                        t_work_pos[wp - 1] = pos
                        t_work_x[wp] = y
                        t_work_pos[wp] = 0
                        wp += 1
                        advanced = 1
                    elif t_on[y]:
                        if t_index[y] < t_low[x]:
                            t_low[x] = t_index[y]
            else:
                v = x - nc
                while pos < nc:
                    i = pos
                    pos += 1
                    if not ((dom[cells[i]] >> v) & 1) or mcell[i] == v:
                        continue
                    y = i
                    if t_index[y] < 0:
                        t_work_pos[wp - 1] = pos
                        t_work_x[wp] = y
                        t_work_pos[wp] = 0
                        wp += 1
                        advanced = 1
                        break
                    if t_on[y] and t_index[y] < t_low[x]:
                        t_low[x] = t_index[y]
            if advanced:
                continue
            if t_low[x] == t_index[x]:
                while True:
                    sp -= 1
                    y = t_sstack[sp]
                    t_on[y] = 0
                    t_comp[y] = ncomp
                    if y == x:
                        break
                ncomp += 1
            wp -= 1
            if wp > 0:
                j = t_work_x[wp - 1]
                if t_low[x] < t_low[j]:
                    t_low[j] = t_low[x]

    nch = 0
    for i in range(nc):
        av = dom[cells[i]]
        keep = (<u64>1) << mcell[i]
        rem = av & ~keep
        while rem:
            v = __builtin_ctzll(rem)
            rem &= rem - 1
            if t_comp[i] == t_comp[nc + v] or reach_flag[nc + v]:
                keep |= (<u64>1) << v
        if keep != av:
            dom[cells[i]] = keep
            changed[nch] = cells[i]
            nch += 1
    return nch


cdef int _propagate(int m, int n, int size, u64 *dom, int *assign,
                    int *row_cells, int *row_cnt, int *col_cells,
                    int *col_cnt, int *queue, int *queued,
                    int *seeds, int nseeds,
                    int *mcell, int *mval, int *t_index, int *t_low,
                    int *t_comp, int *t_on, int *t_sstack, int *t_work_x,
                    int *t_work_pos, int *reach_flag, int *reach_stack,
                    int *changed) noexcept:
    # Runs line filters until stable, starting from the seeded lines
    # (nseeds < 0 seeds every line).  Returns -1, or a dead cell.
    cdef int s, r, c, line, other, nc, nch, j, i, qhead, qtail, qcap
    cdef int *cells
    for r in range(m):
        row_cnt[r] = 0
    for c in range(n):
        col_cnt[c] = 0
    for s in range(size):
        if assign[s] < 0:
            r = s / n
            c = s % n
            row_cells[r * n + row_cnt[r]] = s
            row_cnt[r] += 1
            col_cells[c * m + col_cnt[c]] = s
            col_cnt[c] += 1
    qcap = m + n + 1
    for line in range(m + n):
        queued[line] = 0
    qhead = 0
    qtail = 0
    if nseeds < 0:
        for line in range(m + n):
            queue[line] = line
            queued[line] = 1
        qtail = m + n
    else:
        for i in range(nseeds):
            line = seeds[i]
            if not queued[line]:
                queued[line] = 1
                queue[qtail] = line
                qtail += 1
                if qtail == qcap:
                    qtail = 0
    while qhead != qtail:
        line = queue[qhead]
        qhead += 1
        if qhead == qcap:
            qhead = 0
        queued[line] = 0
        if line < m:
            cells = row_cells + line * n
            nc = row_cnt[line]
        else:
            cells = col_cells + (line - m) * m
            nc = col_cnt[line - m]
        nch = _filter_line(cells, nc, dom, mcell, mval, t_index, t_low,
                           t_comp, t_on, t_sstack, t_work_x, t_work_pos,
                           reach_flag, reach_stack, changed)
        if nch < 0:
            return cells[0] if nc > 0 else 0
        for j in range(nch):
            s = changed[j]
            if dom[s] == 0:
                return s
            other = m + (s % n) if line < m else s / n
            if not queued[other]:
                queued[other] = 1
                queue[qtail] = other
                qtail += 1
                if qtail == qcap:
                    qtail = 0
    return -1


cdef void _select(int size, int k, u64 *dom, int *assign,
                  int *out_s, u64 *out_av) noexcept:
    cdef int best_s = -1, best_cnt = k + 1, s, cnt
    cdef u64 best_av = 0
    for s in range(size):
        if assign[s] >= 0:
            continue
        cnt = __builtin_popcountll(dom[s])
        if cnt < best_cnt:
            best_s = s
            best_av = dom[s]
            best_cnt = cnt
            if cnt == 1:
                break
    out_s[0] = best_s
    out_av[0] = best_av


cdef void _pick_raw(int size, int n, u64 *shafts, u64 *row_used,
                    u64 *col_used, int *assign,
                    int *out_s, u64 *out_av) noexcept:
    cdef int s, r, c
    for s in range(size):
        if assign[s] < 0:
            r = s / n
            c = s % n
            out_s[0] = s
            out_av[0] = shafts[s] & ~row_used[r] & ~col_used[c]
            return
    out_s[0] = 0
    out_av[0] = 0


def exact_search(int m, int n, int k, shafts, bint count_mode=False,
                 long long node_cap=0, bint mrv=True):
    """Depth-first search for Latin boxes supported by an m x n x k array;
    see _kernels_py.exact_search for the full contract.

    mrv mode keeps, per search depth, the domains of all open cells
    filtered to the fixpoint of every line constraint.  A child state
    starts from its parent's fixpoint (sound: any value a parent line
    filter removed stays removable after one more placement), applies the
    placement, and re-filters only from the lines it dirtied; the
    propagation worklist then reaches the same fixpoint a full recompute
    from raw availability would.  Line ids: rows 0..m-1, cols m..m+n-1.
    """
    cdef int size = m * n
    if size == 0:
        return (EXHAUSTED, 1, 0) if count_mode else (FOUND, [], 0)
    if len(shafts) != size:
        raise ValueError("shaft list length does not match dims")

    cdef int maxline = m if m > n else n
    cdef int nvert = maxline + 64
    cdef Py_ssize_t n_u64 = 2 * size + m + n + 1
    cdef Py_ssize_t n_int = (4 * size + 1 + m + n + 2 * (m + n) + 1
                             + (m + n + 2) + maxline + 64 + 9 * nvert
                             + maxline)
    cdef u64 *ubuf = <u64 *>PyMem_Malloc(n_u64 * sizeof(u64))
    cdef int *ibuf = <int *>PyMem_Malloc(n_int * sizeof(int))
    cdef u64 *dom_stack = NULL
    if mrv and ubuf != NULL and ibuf != NULL:
        dom_stack = <u64 *>PyMem_Malloc(
            (<Py_ssize_t>size + 1) * size * sizeof(u64))
    if ubuf == NULL or ibuf == NULL or (mrv and dom_stack == NULL):
        if ubuf != NULL:
            PyMem_Free(ubuf)
        if ibuf != NULL:
            PyMem_Free(ibuf)
        if dom_stack != NULL:
            PyMem_Free(dom_stack)
        raise MemoryError()
    cdef u64 *shaft_arr = ubuf
    cdef u64 *row_used = shaft_arr + size
    cdef u64 *col_used = row_used + m
    cdef u64 *stack_rem = col_used + n
    cdef int *assign = ibuf
    cdef int *stack_s = assign + size
    cdef int *row_cells = stack_s + size + 1
    cdef int *row_cnt = row_cells + size
    cdef int *col_cells = row_cnt + m
    cdef int *col_cnt = col_cells + size
    cdef int *queue = col_cnt + n
    cdef int *queued = queue + m + n + 1
    cdef int *seeds = queued + m + n
    cdef int *mcell = seeds + m + n + 2
    cdef int *mval = mcell + maxline
    cdef int *t_index = mval + 64
    cdef int *t_low = t_index + nvert
    cdef int *t_comp = t_low + nvert
    cdef int *t_on = t_comp + nvert
    cdef int *t_sstack = t_on + nvert
    cdef int *t_work_x = t_sstack + nvert
    cdef int *t_work_pos = t_work_x + nvert
    cdef int *reach_flag = t_work_pos + nvert
    cdef int *reach_stack = reach_flag + nvert
    cdef int *changed = reach_stack + nvert

    cdef int i, s, r, c, v, depth, placed, dead, nseeds
    cdef int r0, c0, s0
    cdef long long nodes = 0
    cdef unsigned long long count = 0
    cdef u64 rem, av, bit
    cdef u64 *dom
    cdef u64 *parent
    try:
        for s in range(size):
            shaft_arr[s] = <u64>shafts[s]
            assign[s] = -1
        for i in range(m):
            row_used[i] = 0
        for i in range(n):
            col_used[i] = 0

        placed = 0
        if mrv:
            # root state: raw availability, filtered from every line
            dom = dom_stack
            stack_s[0] = 0
            stack_rem[0] = 0
            dead = -1
            for s in range(size):
                r = s / n
                c = s % n
                av = shaft_arr[s] & ~row_used[r] & ~col_used[c]
                if av == 0:
                    stack_s[0] = s
                    dead = s
                    break
                dom[s] = av
            if dead < 0:
                dead = _propagate(m, n, size, dom, assign, row_cells,
                                  row_cnt, col_cells, col_cnt, queue,
                                  queued, seeds, -1, mcell, mval, t_index,
                                  t_low, t_comp, t_on, t_sstack, t_work_x,
                                  t_work_pos, reach_flag, reach_stack,
                                  changed)
                if dead >= 0:
                    stack_s[0] = dead
                else:
                    _select(size, k, dom, assign, &stack_s[0], &stack_rem[0])
        else:
            _pick_raw(size, n, shaft_arr, row_used, col_used, assign,
                      &stack_s[0], &stack_rem[0])
        depth = 1
        while depth > 0:
            s = stack_s[depth - 1]
            if assign[s] >= 0:
                v = assign[s]
                assign[s] = -1
                placed -= 1
                r = s / n
                c = s % n
                row_used[r] &= ~((<u64>1) << v)
                col_used[c] &= ~((<u64>1) << v)
            rem = stack_rem[depth - 1]
            if rem == 0:
                depth -= 1
                continue
            v = __builtin_ctzll(rem)
            stack_rem[depth - 1] = rem & (rem - 1)
            nodes += 1
            if node_cap and nodes > node_cap:
                return CAP_HIT, (int(count) if count_mode else None), nodes
            assign[s] = v
            placed += 1
            r = s / n
            c = s % n
            row_used[r] |= (<u64>1) << v
            col_used[c] |= (<u64>1) << v
            if placed == size:
                if not count_mode:
                    return FOUND, [assign[i] for i in range(size)], nodes
                count += 1
                continue
            if mrv:
                s0 = s
                r0 = r
                c0 = c
                parent = dom_stack + (<Py_ssize_t>(depth - 1)) * size
                dom = dom_stack + (<Py_ssize_t>depth) * size
                memcpy(dom, parent, size * sizeof(u64))
                dom[s0] = 0
                bit = (<u64>1) << v
                seeds[0] = r0
                seeds[1] = m + c0
                nseeds = 2
                dead = -1
                for c in range(n):
                    s = r0 * n + c
                    if assign[s] < 0 and dom[s] & bit:
                        dom[s] &= ~bit
                        if dom[s] == 0:
                            dead = s
                            break
                        seeds[nseeds] = m + c
                        nseeds += 1
                if dead < 0:
                    for r in range(m):
                        s = r * n + c0
                        if assign[s] < 0 and dom[s] & bit:
                            dom[s] &= ~bit
                            if dom[s] == 0:
                                dead = s
                                break
                            seeds[nseeds] = r
                            nseeds += 1
                if dead < 0:
                    dead = _propagate(m, n, size, dom, assign, row_cells,
                                      row_cnt, col_cells, col_cnt, queue,
                                      queued, seeds, nseeds, mcell, mval,
                                      t_index, t_low, t_comp, t_on,
                                      t_sstack, t_work_x, t_work_pos,
                                      reach_flag, reach_stack, changed)
                if dead >= 0:
                    stack_s[depth] = dead
                    stack_rem[depth] = 0
                else:
                    _select(size, k, dom, assign,
                            &stack_s[depth], &stack_rem[depth])
            else:
                _pick_raw(size, n, shaft_arr, row_used, col_used, assign,
                          &stack_s[depth], &stack_rem[depth])
            depth += 1
        return EXHAUSTED, (int(count) if count_mode else None), nodes
    finally:
        PyMem_Free(ubuf)
        PyMem_Free(ibuf)
        if dom_stack != NULL:
            PyMem_Free(dom_stack)
