"""Benchmark the pure-Python kernels against the compiled extension.

Runs the exact permanent on dense matrices and the exact search in count
mode on complete cubes, timing both backends on identical inputs and
checking they agree.  Usage:

    python3 benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time

from latinbox import _kernels_py as pure

try:
    from latinbox import _speedups as fast
except ImportError:
    fast = None


def _time(fn, *args) -> tuple[float, object]:
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def _row(label: str, pure_fn, fast_fn, args) -> None:
    tp, vp = _time(pure_fn, *args)
    if fast is None:
        print(f"{label:<28} pure {tp:8.3f}s   compiled      n/a")
        return
    tf, vf = _time(fast_fn, *args)
    if vp != vf:
        raise AssertionError(f"{label}: backends disagree ({vp!r} vs {vf!r})")
    speedup = tp / tf if tf > 0 else float("inf")
    print(f"{label:<28} pure {tp:8.3f}s   compiled {tf:8.3f}s   {speedup:7.1f}x")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes only")
    args = ap.parse_args()

    if fast is None:
        print("compiled extension not built; showing pure timings only")

    perm_sizes = [12, 16] if args.quick else [12, 16, 18, 20]
    for n in perm_sizes:
        rows = [(1 << n) - 1] * n
        _row(f"permanent dense n={n}", pure.ryser_permanent,
             fast.ryser_permanent if fast else None, (rows, n))

    count_sizes = [4] if args.quick else [4, 5]
    for n in count_sizes:
        shafts = [(1 << n) - 1] * (n * n)
        _row(
            f"count squares n={n}",
            pure.exact_search,
            fast.exact_search if fast else None,
            (n, n, n, shafts, True),
        )

    # first-solution search on a diagonal-free cube: forces real backtracking
    n = 6 if args.quick else 7
    shafts = [((1 << n) - 1) & ~(1 << ((r + c) % n)) for r in range(n) for c in range(n)]
    _row(
        f"first solution punctured n={n}",
        pure.exact_search,
        fast.exact_search if fast else None,
        (n, n, n, shafts, False),
    )


if __name__ == "__main__":
    main()
