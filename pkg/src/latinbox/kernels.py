"""Kernel dispatch: compiled extension when available, pure Python otherwise.

The two backends implement identical contracts (see _kernels_py).  Set
LATINBOX_PURE=1 before import to force the fallback; ``BACKEND`` reports
which one is live.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

from . import _kernels_py
from .errors import SizeCapError

if os.environ.get("LATINBOX_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

PERMANENT_CAP = 24
SYMBOL_CAP = 64

FOUND = _kernels_py.FOUND
EXHAUSTED = _kernels_py.EXHAUSTED
CAP_HIT = _kernels_py.CAP_HIT

__all__ = [
    "BACKEND",
    "PERMANENT_CAP",
    "SYMBOL_CAP",
    "FOUND",
    "EXHAUSTED",
    "CAP_HIT",
    "permanent_bitmask",
    "search_bitmask",
]


def permanent_bitmask(rows: Sequence[int], n: Optional[int] = None) -> int:
    """Exact permanent of an n x n 0-1 matrix given as row bitmasks.

    Hard cap n <= 24: the inclusion-exclusion sum has 2^n terms and the
    compiled accumulator is sized for that range.
    """
    if n is None:
        n = len(rows)
    if len(rows) != n:
        raise ValueError("row count does not match n")
    if n > PERMANENT_CAP:
        raise SizeCapError(f"permanent cap is n <= {PERMANENT_CAP}, got {n}")
    full = (1 << n) - 1
    for r in rows:
        if r < 0 or r > full:
            raise ValueError("row mask out of range for n columns")
    return int(_impl.ryser_permanent(list(rows), n))


def search_bitmask(
    m: int,
    n: int,
    k: int,
    shafts: Sequence[int],
    count_mode: bool = False,
    node_cap: int = 0,
    mrv: bool = True,
) -> tuple[int, Optional[object], int]:
    """Exact Latin-box search over shaft bitmasks; see _kernels_py.exact_search."""
    if k > SYMBOL_CAP:
        raise SizeCapError(f"search kernel handles k <= {SYMBOL_CAP} symbols, got {k}")
    if len(shafts) != m * n:
        raise ValueError("shaft list length does not match dims")
    return _impl.exact_search(m, n, k, list(shafts), count_mode, int(node_cap), bool(mrv))
