"""Deterministic SVG line charts.

Everything here is a pure function of its inputs: fixed viewport, fixed
palette, fixed-precision coordinates, no timestamps.  Rendering the same
data twice yields byte-identical files, which lets output determinism be
checked by hashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

__all__ = [
    "Band",
    "Series",
    "render_line_chart",
    "curve_chart",
    "trajectory_chart",
]

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 62
MARGIN_RIGHT = 18
MARGIN_TOP = 34
MARGIN_BOTTOM = 46

PALETTE = ["#1f6fb2", "#c03d2e", "#2e8b57", "#8a52c8", "#b8860b"]

_BG = "#ffffff"
_AXIS = "#333333"
_GRID = "#dddddd"


@dataclass
class Series:
    """One polyline: name for the legend, points, palette slot."""

    name: str
    xs: Sequence[float]
    ys: Sequence[float]
    color_index: int = 0
    dashed: bool = False

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ValueError("xs and ys must have equal length")


@dataclass
class Band:
    """A shaded vertical band between two curves sharing x coordinates."""

    xs: Sequence[float]
    lo: Sequence[float]
    hi: Sequence[float]
    color_index: int = 0

    def __post_init__(self):
        if not (len(self.xs) == len(self.lo) == len(self.hi)):
            raise ValueError("xs, lo, hi must have equal length")


@dataclass
class _Frame:
    x0: float
    x1: float
    y0: float
    y1: float

    def px(self, x: float) -> float:
        span = self.x1 - self.x0
        t = 0.5 if span == 0 else (x - self.x0) / span
        return MARGIN_LEFT + t * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        span = self.y1 - self.y0
        t = 0.5 if span == 0 else (y - self.y0) / span
        return HEIGHT - MARGIN_BOTTOM - t * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def _fmt(v: float) -> str:
    # fixed precision keeps output independent of float repr details
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _fmt_tick(v: float) -> str:
    s = f"{v:.4g}"
    return "0" if s == "-0" else s


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi], stepping 1/2/5 times a power
    of ten."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return out


def _data_range(
    series: Sequence[Series], bands: Sequence[Band], axis: str
) -> tuple[float, float]:
    vals: list[float] = []
    for s in series:
        vals.extend(s.xs if axis == "x" else s.ys)
    for b in bands:
        if axis == "x":
            vals.extend(b.xs)
        else:
            vals.extend(b.lo)
            vals.extend(b.hi)
    if not vals:
        return (0.0, 1.0)
    lo, hi = min(vals), max(vals)
    if lo == hi:
        pad = 0.5 if lo == 0 else abs(lo) * 0.1
        return (lo - pad, hi + pad)
    pad = (hi - lo) * 0.04
    return (lo - pad, hi + pad)


def _polyline_points(frame: _Frame, xs: Sequence[float], ys: Sequence[float]) -> str:
    return " ".join(f"{_fmt(frame.px(x))},{_fmt(frame.py(y))}" for x, y in zip(xs, ys))


def render_line_chart(
    series: Sequence[Series],
    bands: Sequence[Band] = (),
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    x_range: Optional[tuple[float, float]] = None,
    y_range: Optional[tuple[float, float]] = None,
    vlines: Sequence[tuple[float, str]] = (),
) -> str:
    """Render series and bands into a complete SVG document string.

    Empty input produces an axes-only chart over [0,1]x[0,1].  ``vlines``
    are (x, label) markers, used for threshold estimates.
    """
    x0, x1 = x_range if x_range is not None else _data_range(series, bands, "x")
    y0, y1 = y_range if y_range is not None else _data_range(series, bands, "y")
    frame = _Frame(x0, x1, y0, y1)

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="{_BG}"/>')

    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM

    for t in _ticks(x0, x1):
        px = frame.px(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{top}" x2="{_fmt(px)}" y2="{bottom}" '
            f'stroke="{_GRID}" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{bottom + 16}" font-size="11" '
            f'text-anchor="middle" fill="{_AXIS}">{_fmt_tick(t)}</text>'
        )
    for t in _ticks(y0, y1):
        py = frame.py(t)
        out.append(
            f'<line x1="{left}" y1="{_fmt(py)}" x2="{right}" y2="{_fmt(py)}" '
            f'stroke="{_GRID}" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{left - 6}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end" fill="{_AXIS}">{_fmt_tick(t)}</text>'
        )

    for b in bands:
        if len(b.xs) == 0:
            continue
        color = PALETTE[b.color_index % len(PALETTE)]
        forward = _polyline_points(frame, b.xs, b.hi)
        backward = _polyline_points(frame, list(reversed(b.xs)), list(reversed(b.lo)))
        out.append(
            f'<polygon points="{forward} {backward}" fill="{color}" '
            f'fill-opacity="0.18" stroke="none"/>'
        )

    for x, label in vlines:
        px = frame.px(x)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{top}" x2="{_fmt(px)}" y2="{bottom}" '
            f'stroke="{_AXIS}" stroke-width="1" stroke-dasharray="2,3"/>'
        )
        if label:
            out.append(
                f'<text x="{_fmt(px + 4)}" y="{top + 12}" font-size="11" '
                f'fill="{_AXIS}">{label}</text>'
            )

    for s in series:
        if len(s.xs) == 0:
            continue
        color = PALETTE[s.color_index % len(PALETTE)]
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        out.append(
            f'<polyline points="{_polyline_points(frame, s.xs, s.ys)}" '
            f'fill="none" stroke="{color}" stroke-width="1.8"{dash}/>'
        )

    # axes on top of grid and data
    out.append(
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" '
        f'stroke="{_AXIS}" stroke-width="1.5"/>'
    )
    out.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" '
        f'stroke="{_AXIS}" stroke-width="1.5"/>'
    )
    if title:
        out.append(
            f'<text x="{WIDTH // 2}" y="20" font-size="14" text-anchor="middle" '
            f'fill="{_AXIS}">{_escape(title)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" font-size="12" '
            f'text-anchor="middle" fill="{_AXIS}">{_escape(xlabel)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{HEIGHT // 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT // 2})" fill="{_AXIS}">'
            f"{_escape(ylabel)}</text>"
        )

    ly = top + 8
    for s in series:
        color = PALETTE[s.color_index % len(PALETTE)]
        out.append(
            f'<line x1="{right - 150}" y1="{ly}" x2="{right - 128}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"'
            + (' stroke-dasharray="5,4"' if s.dashed else "")
            + "/>"
        )
        out.append(
            f'<text x="{right - 122}" y="{ly + 4}" font-size="11" '
            f'fill="{_AXIS}">{_escape(s.name)}</text>'
        )
        ly += 16

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def curve_chart(rows: list[dict]) -> str:
    """Threshold-sweep chart: success fraction vs p with the 95% interval
    band.  Expects dict rows with p, phat, lo, hi keys (strings or floats)."""
    if not rows:
        return render_line_chart(
            [], title="containment probability", xlabel="p", ylabel="fraction",
            x_range=(0.0, 1.0), y_range=(0.0, 1.0),
        )
    ps = [float(r["p"]) for r in rows]
    phat = [float(r["phat"]) for r in rows]
    lo = [float(r["lo"]) for r in rows]
    hi = [float(r["hi"]) for r in rows]
    return render_line_chart(
        [Series("empirical", ps, phat, 0)],
        bands=[Band(ps, lo, hi, 0)],
        title="containment probability",
        xlabel="p",
        ylabel="fraction",
        y_range=(0.0, 1.0),
    )


def trajectory_chart(rows: list[dict]) -> str:
    """Packing-trajectory chart: measured uncovered-degree and codegree
    fractions with their predicted counterparts.  Expects the trajectory
    CSV schema (x, y_meas, z_meas, y_pred, z_pred)."""
    if not rows:
        return render_line_chart(
            [], title="packing trajectory", xlabel="steps / n^2", ylabel="fraction",
            x_range=(0.0, 1.0), y_range=(0.0, 1.0),
        )
    xs = [float(r["x"]) for r in rows]
    return render_line_chart(
        [
            Series("uncovered degree", xs, [float(r["y_meas"]) for r in rows], 0),
            Series("predicted y", xs, [float(r["y_pred"]) for r in rows], 0, dashed=True),
            Series("codegree", xs, [float(r["z_meas"]) for r in rows], 1),
            Series("predicted z", xs, [float(r["z_pred"]) for r in rows], 1, dashed=True),
        ],
        title="packing trajectory",
        xlabel="steps / n^2",
        ylabel="fraction",
    )
