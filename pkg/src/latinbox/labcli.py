"""Experiment driver and command line interface.

Runs seeded Monte Carlo campaigns over the random array models: threshold
sweeps with Wilson intervals and a monotone logistic fit, hitting-time
trials comparing the shaft-fill time against the first time a Latin box
appears, containment-probability validation against the exact small-case
polynomials, and greedy packing trajectory campaigns.

Every trial derives its own generator from ``(master seed, experiment
label, indices...)``, so any record can be replayed in isolation.  All
CSV/JSONL/SVG outputs are deterministic functions of config plus seed;
wall-clock timings are kept out of them and written to a ``.times.txt``
sidecar instead.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Optional, Sequence

import numpy as np

from .arrays import (
    Array3D,
    sample_binomial,
    sample_green_blue,
    sample_process,
    validate_latin_box,
)
from .enumeration import (
    count_latin_boxes,
    count_rectangles_exact,
    q_small,
    square_supports,
)
from .finders import (
    FinderOutcome,
    StagedParams,
    find_block_recursive,
    find_exact,
    find_plane_matching,
    find_staged,
)
from .packing import deviation_report, process_pack, trajectory_csv_rows
from .rng import substream
from .svgplot import curve_chart, trajectory_chart

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "ConfigError",
    "run_threshold_sweep",
    "run_hitting_time",
    "run_q_validation",
    "run_packing_campaign",
    "chernoff_tail",
    "wilson_interval",
    "fit_logistic_p50",
    "emit_plot",
    "main",
]

EXACT_N_GUARD = 30
DEFAULT_NODE_CAP = 2_000_000


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ExperimentError(RuntimeError):
    """Experiment-level failure, e.g. every trial invalid (exit code 3)."""


@dataclass
class ExperimentConfig:
    """Shared knobs for all experiment kinds; unused fields are ignored.

    shape picks the array dims from (n, eps): ``cube`` is n x n x n,
    ``flat`` is ceil((1-eps)n) x n x n, ``deep`` is n x n x ceil((1+eps)n).
    """

    kind: str = "sweep"
    n: int = 8
    n0: int = 2
    eps: float = 0.5
    shape: str = "cube"
    p_grid: list = field(default_factory=list)
    trials: int = 100
    seed: int = 0
    threads: int = 1
    finder: str = "exact"
    finder_params: dict = field(default_factory=dict)
    node_cap: int = 0
    horizon: int = 0
    record_every: int = 0
    ns: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    out: str = "."

    def validate(self) -> list[str]:
        errs = []
        if self.trials < 1:
            errs.append("trials must be >= 1")
        if self.seed < 0:
            errs.append("seed must be non-negative")
        if self.threads < 1:
            errs.append("threads must be >= 1")
        if any(not (0.0 <= p <= 1.0) for p in self.p_grid):
            errs.append("p grid values must lie in [0, 1]")
        if self.shape not in ("cube", "flat", "deep"):
            errs.append(f"unknown shape {self.shape!r}")
        if self.kind == "sweep" and not self.p_grid:
            errs.append("sweep needs a non-empty p grid")
        if self.kind in ("sweep", "hitting") and self.n < 1:
            errs.append("n must be >= 1")
        if self.kind == "hitting" and self.n > EXACT_N_GUARD:
            errs.append(f"hitting-time trials are guarded to n <= {EXACT_N_GUARD}")
        if self.kind == "sweep" and self.finder == "exact" and self.n > EXACT_N_GUARD:
            errs.append(f"exact finder sweeps are guarded to n <= {EXACT_N_GUARD}")
        if self.kind == "qval" and self.n0 > 3:
            errs.append("q validation needs n0 <= 3")
        return errs

    def dims(self) -> tuple[int, int, int]:
        n, eps = self.n, self.eps
        if self.shape == "cube":
            return (n, n, n)
        if self.shape == "flat":
            return (max(1, math.ceil((1.0 - eps) * n)), n, n)
        if self.shape == "deep":
            return (n, n, math.ceil((1.0 + eps) * n))
        raise ConfigError(f"unknown shape {self.shape!r}")


@dataclass
class TrialRecord:
    """One unit of Monte Carlo work, replayable from its seed path."""

    index: int
    seed_path: tuple
    params: dict
    outcome: dict
    wall_ms: float = 0.0

    def to_json_dict(self) -> dict:
        # timings are non-deterministic and live in the sidecar only
        return {
            "index": self.index,
            "seed_path": list(self.seed_path),
            "params": self.params,
            "outcome": self.outcome,
        }


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**data)


# ---------------------------------------------------------------------------
# statistics helpers


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    ph = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (ph + z2 / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def chernoff_tail(N: int, p: float, alpha: float, side: str) -> float:
    """Bernoulli sum tail bound: P(S <= (1-a)Np) <= exp(-a^2 Np / 2) and
    P(S >= (1+a)Np) <= exp(-a^2 Np / 3)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if side == "lower":
        return math.exp(-alpha * alpha * N * p / 2.0)
    if side == "upper":
        return math.exp(-alpha * alpha * N * p / 3.0)
    raise ValueError("side must be 'lower' or 'upper'")


def _logistic_nll(a: float, bs: np.ndarray, ps: np.ndarray, k: np.ndarray, t: np.ndarray) -> np.ndarray:
    z = np.clip(a * (ps[None, :] - bs[:, None]), -35.0, 35.0)
    q = 1.0 / (1.0 + np.exp(-z))
    q = np.clip(q, 1e-12, 1.0 - 1e-12)
    return -(k[None, :] * np.log(q) + (t - k)[None, :] * np.log(1.0 - q)).sum(axis=1)


def fit_logistic_p50(
    ps: Sequence[float], successes: Sequence[int], trials: Sequence[int]
) -> tuple[float, float]:
    """Fit a nondecreasing logistic 1/(1+exp(-a(p-b))), a >= 0, by maximum
    likelihood over a deterministic grid with two zoom passes.

    Returns (b, a); b is where the fitted curve crosses one half.
    """
    ps = np.asarray(ps, dtype=float)
    k = np.asarray(successes, dtype=float)
    t = np.asarray(trials, dtype=float)
    if ps.size == 0:
        raise ValueError("empty grid")
    lo, hi = float(ps.min()), float(ps.max())
    if hi == lo:
        return (lo, 0.0)
    best_a, best_b = 1.0, 0.5 * (lo + hi)
    a_lo, a_hi = 1e-2, 1e4
    b_lo, b_hi = lo, hi
    for _ in range(3):
        a_grid = np.geomspace(a_lo, a_hi, 61)
        b_grid = np.linspace(b_lo, b_hi, 101)
        best = (math.inf, best_a, best_b)
        for a in a_grid:
            vals = _logistic_nll(float(a), b_grid, ps, k, t)
            i = int(np.argmin(vals))
            if vals[i] < best[0]:
                best = (float(vals[i]), float(a), float(b_grid[i]))
        _, best_a, best_b = best
        a_lo, a_hi = best_a / 3.0, best_a * 3.0
        span = (b_hi - b_lo) / 10.0
        b_lo, b_hi = best_b - span, best_b + span
    return (best_b, best_a)


# ---------------------------------------------------------------------------
# deterministic file emission


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerows(rows)
    return buf.getvalue()


def _jsonl_text(records: Sequence[dict]) -> str:
    return "".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records
    )


def _json_text(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _times_text(records: Sequence[TrialRecord]) -> str:
    return "".join(f"{r.index} {r.wall_ms:.3f}\n" for r in records)


def _run_pool(fn: Callable[[int], TrialRecord], count: int, threads: int) -> list[TrialRecord]:
    """Run trials over a bounded pool; results come back in index order."""
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _finder_callable(cfg: ExperimentConfig) -> Callable[[Array3D, tuple], FinderOutcome]:
    name = cfg.finder
    if name == "exact":
        cap = cfg.node_cap

        def run(arr: Array3D, path: tuple) -> FinderOutcome:
            return find_exact(arr, node_cap=cap)

    elif name == "block":

        def run(arr: Array3D, path: tuple) -> FinderOutcome:
            return find_block_recursive(arr)

    elif name == "plane":
        fp = dict(cfg.finder_params)

        def run(arr: Array3D, path: tuple) -> FinderOutcome:
            return find_plane_matching(
                arr,
                seed=substream(cfg.seed, *path, "finder"),
                fast=bool(fp.get("fast", False)),
                abort_check=bool(fp.get("abort_check", True)),
            )

    else:
        raise ConfigError(f"unknown finder {name!r} for this experiment")
    return run


# ---------------------------------------------------------------------------
# experiments


def run_threshold_sweep(cfg: ExperimentConfig) -> dict:
    """Containment probability along a p grid for one array shape.

    Writes ``sweep_<shape>_n<n>.{csv,jsonl,svg}``, a ``_summary.json`` and a
    timing sidecar into cfg.out; returns the summary dict.  The CSV carries
    p, successes, trials, phat, lo, hi.  Constructive finders can only
    under-report containment, so their sweeps are flagged one-sided.
    """
    errs = cfg.validate()
    if errs:
        raise ConfigError("; ".join(errs))
    dims = cfg.dims()
    run = _finder_callable(cfg)
    grid = list(cfg.p_grid)
    records: list[TrialRecord] = []
    rows = [["p", "successes", "trials", "phat", "lo", "hi"]]
    per_p: list[dict] = []

    for pi, p in enumerate(grid):

        def trial(ti: int, pi: int = pi, p: float = p) -> TrialRecord:
            path = ("sweep", pi, ti)
            t0 = time.perf_counter()
            arr = sample_binomial(*dims, p, substream(cfg.seed, *path, "model"))
            out = run(arr, path)
            if out.found:
                validate_latin_box(out.result, arr)
            wall = (time.perf_counter() - t0) * 1000.0
            return TrialRecord(
                index=pi * cfg.trials + ti,
                seed_path=(cfg.seed,) + path,
                params={"p": p, "dims": list(dims)},
                outcome={"status": out.status, "found": out.found},
                wall_ms=wall,
            )

        batch = _run_pool(trial, cfg.trials, cfg.threads)
        records.extend(batch)
        succ = sum(1 for r in batch if r.outcome["found"])
        indet = sum(1 for r in batch if r.outcome["status"] == "indeterminate")
        ph = succ / cfg.trials
        lo, hi = wilson_interval(succ, cfg.trials)
        rows.append(
            [f"{p:.10g}", str(succ), str(cfg.trials), f"{ph:.6f}", f"{lo:.6f}", f"{hi:.6f}"]
        )
        per_p.append(
            {"p": p, "successes": succ, "trials": cfg.trials, "phat": ph,
             "lo": lo, "hi": hi, "indeterminate": indet}
        )

    warnings = []
    for a, b in zip(per_p, per_p[1:]):
        pooled = math.sqrt(
            a["phat"] * (1 - a["phat"]) / a["trials"]
            + b["phat"] * (1 - b["phat"]) / b["trials"]
        )
        if a["phat"] > b["phat"] + 3.0 * pooled:
            warnings.append(
                f"empirical curve decreases from p={a['p']:.6g} to p={b['p']:.6g}"
            )
    p50, slope = fit_logistic_p50(
        grid, [d["successes"] for d in per_p], [d["trials"] for d in per_p]
    )

    prefix = os.path.join(cfg.out, f"sweep_{cfg.shape}_n{cfg.n}")
    os.makedirs(cfg.out, exist_ok=True)
    _write_text(prefix + ".csv", _csv_text(rows))
    _write_text(prefix + ".jsonl", _jsonl_text([r.to_json_dict() for r in records]))
    _write_text(prefix + ".svg", curve_chart([dict(zip(rows[0], r)) for r in rows[1:]]))
    summary = {
        "kind": "sweep",
        "dims": list(dims),
        "shape": cfg.shape,
        "n": cfg.n,
        "eps": cfg.eps,
        "seed": cfg.seed,
        "trials_per_point": cfg.trials,
        "finder": cfg.finder,
        "one_sided": cfg.finder != "exact",
        "grid": per_p,
        "p50": p50,
        "logistic_slope": slope,
        "warnings": warnings,
    }
    _write_text(prefix + "_summary.json", _json_text(summary))
    _write_text(prefix + ".times.txt", _times_text(records))
    return summary


def tau_box_by_bisection(proc, node_cap: int = DEFAULT_NODE_CAP) -> tuple[Optional[int], int]:
    """First process step whose prefix supports a Latin box.

    Containment is monotone in t, and a box needs every shaft nonempty, so
    the shaft-fill time is a valid lower bracket.  Returns (tau, probes);
    tau is None when any probe hits the node cap (trial invalid).
    """
    n, m = proc.n, proc.m
    total = n * n * m
    lo = max(proc.shaft_fill_time(), n * n) - 1
    hi = total
    probes = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        out = find_exact(proc.prefix(mid), node_cap=node_cap)
        probes += 1
        if out.status == "indeterminate":
            return (None, probes)
        if out.found:
            hi = mid
        else:
            lo = mid
    return (hi, probes)


def tau_box_by_scan(proc, node_cap: int = DEFAULT_NODE_CAP) -> Optional[int]:
    """Linear-scan oracle for the bisection: first t whose prefix works."""
    n, m = proc.n, proc.m
    for t in range(n * n, n * n * m + 1):
        out = find_exact(proc.prefix(t), node_cap=node_cap)
        if out.status == "indeterminate":
            return None
        if out.found:
            return t
    return None


def run_hitting_time(cfg: ExperimentConfig) -> dict:
    """Compare shaft-fill and box hitting times on the uniform process.

    Each trial draws a fresh ordering of the n x n x m cells, reads off the
    shaft-fill time directly, and bisects for the box time with the exact
    finder as oracle.  Cap-hit trials are invalid: excluded from the
    equality rate but counted.  Every valid trial must satisfy
    tau_shaft <= tau_box.
    """
    errs = cfg.validate()
    if errs:
        raise ConfigError("; ".join(errs))
    n = cfg.n
    m = math.ceil((1.0 + cfg.eps) * n)
    cap = cfg.node_cap if cfg.node_cap else DEFAULT_NODE_CAP

    def trial(ti: int) -> TrialRecord:
        path = ("hitting", ti)
        t0 = time.perf_counter()
        proc = sample_process(n, m, substream(cfg.seed, *path, "model"))
        tau_shaft = proc.shaft_fill_time()
        tau_box, probes = tau_box_by_bisection(proc, node_cap=cap)
        wall = (time.perf_counter() - t0) * 1000.0
        valid = tau_box is not None
        if valid and tau_box < tau_shaft:
            raise AssertionError("box hitting time below shaft-fill time")
        return TrialRecord(
            index=ti,
            seed_path=(cfg.seed,) + path,
            params={"n": n, "m": m},
            outcome={
                "tau_shaft": tau_shaft,
                "tau_box": tau_box,
                "equal": (tau_box == tau_shaft) if valid else None,
                "valid": valid,
                "probes": probes,
            },
            wall_ms=wall,
        )

    records = _run_pool(trial, cfg.trials, cfg.threads)
    valid = [r for r in records if r.outcome["valid"]]
    if not valid:
        raise ExperimentError("every hitting-time trial hit the node cap")
    equal = sum(1 for r in valid if r.outcome["equal"])
    lo, hi = wilson_interval(equal, len(valid))
    summary = {
        "kind": "hitting",
        "n": n,
        "m": m,
        "eps": cfg.eps,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "valid_trials": len(valid),
        "invalid_trials": cfg.trials - len(valid),
        "equal": equal,
        "equality_rate": equal / len(valid),
        "wilson_lo": lo,
        "wilson_hi": hi,
        "ordered": all(
            r.outcome["tau_box"] >= r.outcome["tau_shaft"] for r in valid
        ),
    }
    os.makedirs(cfg.out, exist_ok=True)
    prefix = os.path.join(cfg.out, f"hitting_n{n}")
    rows = [["trial", "tau_shaft", "tau_box", "equal", "valid"]]
    for r in records:
        o = r.outcome
        rows.append(
            [
                str(r.index),
                str(o["tau_shaft"]),
                "" if o["tau_box"] is None else str(o["tau_box"]),
                "" if o["equal"] is None else str(int(o["equal"])),
                str(int(o["valid"])),
            ]
        )
    _write_text(prefix + ".csv", _csv_text(rows))
    _write_text(prefix + ".jsonl", _jsonl_text([r.to_json_dict() for r in records]))
    _write_text(prefix + "_summary.json", _json_text(summary))
    _write_text(prefix + ".times.txt", _times_text(records))
    return summary


def run_q_validation(
    n0: int,
    ps: Sequence[float],
    trials: int,
    seed: int = 0,
    out: Optional[str] = None,
) -> dict:
    """Empirical containment probability of an n0-cube vs the exact
    polynomial, with z-scores and Chernoff-band flags.

    Sampling is vectorized: each trial is an integer bitmask of the n0^3
    cells, and containment is a mask test against the order-n0 square
    supports (the same masks the polynomial is built from).
    """
    if n0 > 3:
        raise ConfigError("q validation needs n0 <= 3")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if any(not (0.0 <= p <= 1.0) for p in ps):
        raise ConfigError("p values must lie in [0, 1]")
    poly = q_small(n0)
    supports = square_supports(n0)
    cells = n0 ** 3
    weights = (1 << np.arange(cells, dtype=np.int64)).astype(np.int64)
    report_rows = []
    for pi, p in enumerate(sorted(ps)):
        rng = substream(seed, "qval", pi)
        hits = 0
        remaining = trials
        while remaining > 0:
            chunk = min(remaining, 1 << 16)
            bits = rng.random((chunk, cells)) < p
            masks = (bits * weights[None, :]).sum(axis=1)
            ok = np.zeros(chunk, dtype=bool)
            for s in supports:
                ok |= (masks & s) == s
            hits += int(ok.sum())
            remaining -= chunk
        phat = hits / trials
        exact = float(poly(p))
        sigma = math.sqrt(max(exact * (1.0 - exact), 0.0) / trials)
        z = 0.0 if sigma == 0.0 and phat == exact else (
            math.inf if sigma == 0.0 else (phat - exact) / sigma
        )
        if exact > 0.0:
            alpha_hat = abs(phat - exact) / exact
            band_alpha = math.sqrt(3.0 * math.log(20.0) / (trials * exact))
            flagged = alpha_hat > band_alpha
        else:
            alpha_hat = math.inf if hits else 0.0
            band_alpha = math.inf
            flagged = hits > 0
        report_rows.append(
            {
                "p": p,
                "trials": trials,
                "successes": hits,
                "phat": phat,
                "exact": exact,
                "z": z,
                "alpha_hat": alpha_hat,
                "band_alpha": band_alpha,
                "flagged": flagged,
            }
        )
    report = {
        "kind": "qval",
        "n0": n0,
        "seed": seed,
        "trials": trials,
        "rows": report_rows,
        "max_abs_z": max((abs(r["z"]) for r in report_rows), default=0.0),
    }
    if out is not None:
        os.makedirs(out, exist_ok=True)
        prefix = os.path.join(out, f"qval_n0{n0}")
        rows = [["p", "trials", "successes", "phat", "exact", "z", "flagged"]]
        for r in report_rows:
            rows.append(
                [
                    f"{r['p']:.10g}",
                    str(r["trials"]),
                    str(r["successes"]),
                    f"{r['phat']:.6f}",
                    f"{r['exact']:.6f}",
                    f"{r['z']:.4f}",
                    str(int(r["flagged"])),
                ]
            )
        _write_text(prefix + ".csv", _csv_text(rows))
        _write_text(prefix + "_summary.json", _json_text(report))
    return report


def run_packing_campaign(
    ns: Sequence[int],
    seeds: Sequence[int],
    horizon: Optional[int] = None,
    record_every: Optional[int] = None,
    out: str = ".",
) -> dict:
    """Greedy packing trajectories for each (n, seed) pair.

    Writes one trajectory CSV and chart per pair plus an aggregate summary
    with the sup deviations from the predicted degree/codegree curves.
    """
    if not ns or not seeds:
        raise ConfigError("packing campaign needs non-empty n and seed lists")
    os.makedirs(out, exist_ok=True)
    runs = []
    for n in ns:
        for s in seeds:
            hor = horizon if horizon else n * n
            traj = process_pack(
                n,
                hor,
                record_every=record_every,
                seed=substream(int(s), "pack", int(n)),
            )
            devs = deviation_report(traj)
            rows = trajectory_csv_rows(traj)
            stem = os.path.join(out, f"pack_n{n}_s{s}")
            _write_text(stem + ".csv", _csv_text(rows))
            _write_text(
                stem + ".svg",
                trajectory_chart([dict(zip(rows[0], r)) for r in rows[1:]]),
            )
            runs.append(
                {
                    "n": int(n),
                    "seed": int(s),
                    "horizon": hor,
                    "samples": len(traj.samples),
                    "sup_deg_dev": devs["sup_deg_dev"],
                    "sup_codeg_dev": devs["sup_codeg_dev"],
                }
            )
    summary = {
        "kind": "pack",
        "runs": runs,
        "per_n": {
            str(n): {
                "max_sup_deg_dev": max(r["sup_deg_dev"] for r in runs if r["n"] == n),
                "max_sup_codeg_dev": max(
                    r["sup_codeg_dev"] for r in runs if r["n"] == n
                ),
            }
            for n in sorted(set(int(x) for x in ns))
        },
    }
    _write_text(os.path.join(out, "pack_summary.json"), _json_text(summary))
    return summary


def emit_plot(csv_path: str, kind: str, out_path: Optional[str] = None) -> str:
    """Render a curve or trajectory CSV into a deterministic SVG file."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        names = set(reader.fieldnames or [])
        rows = list(reader)
    if kind == "curve":
        need = {"p", "phat", "lo", "hi"}
        if not need <= names:
            raise ConfigError(
                f"curve CSV needs columns {sorted(need)}, got {sorted(names)}"
            )
        svg = curve_chart(rows)
    elif kind == "trajectory":
        need = {"x", "y_meas", "z_meas", "y_pred", "z_pred"}
        if not need <= names:
            raise ConfigError(
                f"trajectory CSV needs columns {sorted(need)}, got {sorted(names)}"
            )
        svg = trajectory_chart(rows)
    else:
        raise ConfigError("plot kind must be 'curve' or 'trajectory'")
    if out_path is None:
        out_path = os.path.splitext(csv_path)[0] + ".svg"
    _write_text(out_path, svg)
    return out_path


# ---------------------------------------------------------------------------
# CLI


def _parse_floats(text: str) -> list[float]:
    if ":" in text:
        lo, hi, count = text.split(":")
        pts = np.linspace(float(lo), float(hi), int(count))
        return [float(f"{x:.12g}") for x in pts]
    return [float(x) for x in text.split(",") if x]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--config", default=None, help="JSON config file; CLI flags override it")

    ap = argparse.ArgumentParser(
        prog="latinbox",
        description="Random Latin box experiments: sampling, finding, counting, sweeps.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", parents=[common], help="draw one random array and print it")
    sp.add_argument("--model", choices=["binomial", "process", "greenblue"], default="binomial")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)

    fp = sub.add_parser("find", parents=[common], help="run one finder on one random array")
    fp.add_argument("--model", choices=["binomial", "greenblue"], default="binomial")
    fp.add_argument("--finder", choices=["exact", "block", "plane", "staged"], default=None)
    fp.add_argument("--m", type=int, default=None)
    fp.add_argument("--n", type=int, default=None)
    fp.add_argument("--k", type=int, default=None)
    fp.add_argument("--p", type=float, default=None)
    fp.add_argument("--node-cap", type=int, default=None)
    fp.add_argument("--params", default=None, help="finder params as JSON")

    wp = sub.add_parser("sweep", parents=[common], help="containment probability over a p grid")
    wp.add_argument("--shape", choices=["cube", "flat", "deep"], default=None)
    wp.add_argument("--n", type=int, default=None)
    wp.add_argument("--eps", type=float, default=None)
    wp.add_argument("--grid", default=None, help="comma list or lo:hi:count")
    wp.add_argument("--finder", choices=["exact", "block", "plane"], default=None)
    wp.add_argument("--node-cap", type=int, default=None)

    hp = sub.add_parser("hitting", parents=[common], help="shaft-fill vs box hitting times")
    hp.add_argument("--n", type=int, default=None)
    hp.add_argument("--eps", type=float, default=None)
    hp.add_argument("--node-cap", type=int, default=None)

    qp = sub.add_parser("qval", parents=[common], help="Monte Carlo vs exact containment polynomial")
    qp.add_argument("--n0", type=int, default=None)
    qp.add_argument("--ps", default=None, help="comma list of p values")

    pp = sub.add_parser("pack", parents=[common], help="greedy packing trajectory campaign")
    pp.add_argument("--ns", default=None, help="comma list of n values")
    pp.add_argument("--seeds", default=None, help="comma list of seeds")
    pp.add_argument("--horizon", type=int, default=None)
    pp.add_argument("--record-every", type=int, default=None)

    cp = sub.add_parser("count", parents=[common], help="exact Latin box counts for tiny dims")
    cp.add_argument("--m", type=int, required=True)
    cp.add_argument("--n", type=int, required=True)
    cp.add_argument("--k", type=int, required=True)

    lp = sub.add_parser("plot", parents=[common], help="render a CSV into an SVG chart")
    lp.add_argument("--csv", required=True)
    lp.add_argument("--kind", choices=["curve", "trajectory"], required=True)
    lp.add_argument("--out-svg", default=None)

    return ap


def _effective_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config-file values fill in flags the CLI left unset."""
    data: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = config_from_dict(data)
    direct = {
        "seed": "seed", "trials": "trials", "threads": "threads", "out": "out",
        "n": "n", "eps": "eps", "shape": "shape", "finder": "finder",
        "node_cap": "node_cap", "n0": "n0", "horizon": "horizon",
        "record_every": "record_every",
    }
    for attr, fieldname in direct.items():
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, fieldname, val)
    if getattr(args, "grid", None) is not None:
        cfg.p_grid = _parse_floats(args.grid)
    if getattr(args, "ps", None) is not None:
        cfg.p_grid = _parse_floats(args.ps)
    if getattr(args, "ns", None) is not None:
        cfg.ns = _parse_ints(args.ns)
    if getattr(args, "seeds", None) is not None:
        cfg.seeds = _parse_ints(args.seeds)
    if getattr(args, "params", None) is not None:
        try:
            cfg.finder_params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad finder params JSON: {exc}")
    return cfg


def _print_json(obj: dict) -> None:
    sys.stdout.write(_json_text(obj))


def _cmd_sample(args, cfg: ExperimentConfig) -> int:
    n = cfg.n if args.n is None else args.n
    m = args.m if args.m is not None else n
    k = args.k if args.k is not None else n
    p = args.p if args.p is not None else 0.5
    if args.model == "binomial":
        arr = sample_binomial(m, n, k, p, substream(cfg.seed, "sample"))
        doc = {"model": "binomial", "seed": cfg.seed, "p": p, **arr.to_json_dict()}
    elif args.model == "process":
        proc = sample_process(n, k, substream(cfg.seed, "sample"))
        doc = {
            "model": "process",
            "seed": cfg.seed,
            "n": n,
            "m": k,
            "order": [int(x) for x in proc.order],
            "shaft_fill_time": proc.shaft_fill_time(),
        }
    else:
        ca = sample_green_blue(n, k, p, substream(cfg.seed, "sample"))
        doc = {
            "model": "greenblue",
            "seed": cfg.seed,
            "p": p,
            "green": ca.green.to_json_dict(),
            "blue": ca.blue.to_json_dict(),
        }
    _print_json(doc)
    return 0


def _cmd_find(args, cfg: ExperimentConfig) -> int:
    n = cfg.n if args.n is None else args.n
    m = args.m if args.m is not None else n
    k = args.k if args.k is not None else n
    p = args.p if args.p is not None else 0.5
    finder = cfg.finder
    if args.model == "greenblue" or finder == "staged":
        ca = sample_green_blue(n, k, p, substream(cfg.seed, "find", "model"))
        params = None
        if cfg.finder_params:
            params = StagedParams(**cfg.finder_params)
        out = find_staged(ca, params, seed=substream(cfg.seed, "find", "finder"))
    else:
        arr = sample_binomial(m, n, k, p, substream(cfg.seed, "find", "model"))
        if finder == "exact":
            out = find_exact(arr, node_cap=cfg.node_cap)
        elif finder == "block":
            out = find_block_recursive(arr)
        elif finder == "plane":
            out = find_plane_matching(arr, seed=substream(cfg.seed, "find", "finder"))
        else:
            raise ConfigError(f"unknown finder {finder!r}")
    doc = out.to_json_dict()
    doc["seed"] = cfg.seed
    _print_json(doc)
    return 0


def _cmd_count(args, cfg: ExperimentConfig) -> int:
    doc = {"m": args.m, "n": args.n, "k": args.k,
           "latin_boxes": count_latin_boxes(args.m, args.n, args.k)}
    if args.k == args.n:
        doc["rectangle_route"] = count_rectangles_exact(args.m, args.n)
    _print_json(doc)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _effective_config(args)
        cfg.kind = {"sweep": "sweep", "hitting": "hitting", "qval": "qval"}.get(
            args.command, cfg.kind
        )
        if args.command == "sample":
            return _cmd_sample(args, cfg)
        if args.command == "find":
            return _cmd_find(args, cfg)
        if args.command == "count":
            return _cmd_count(args, cfg)
        if args.command == "plot":
            path = emit_plot(args.csv, args.kind, args.out_svg)
            _print_json({"svg": path})
            return 0
        if args.command == "sweep":
            _print_json(run_threshold_sweep(cfg))
            return 0
        if args.command == "hitting":
            _print_json(run_hitting_time(cfg))
            return 0
        if args.command == "qval":
            report = run_q_validation(
                cfg.n0, cfg.p_grid or [0.5], cfg.trials, seed=cfg.seed, out=cfg.out
            )
            _print_json(report)
            return 0
        if args.command == "pack":
            summary = run_packing_campaign(
                cfg.ns or [10],
                cfg.seeds or [0],
                horizon=cfg.horizon or None,
                record_every=cfg.record_every or None,
                out=cfg.out,
            )
            _print_json(summary)
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
