"""End-to-end acceptance gate.

Run with ``pytest -v tests/test_acceptance.py``: each criterion is one test,
so the verbose report shows exactly one PASSED or FAILED line per criterion.
Calibrated constants (floors, brackets, bands, pilot seeds) are committed in
``acceptance_manifest.json`` at the repository root; re-running any criterion
with its committed seed reproduces the pilot numbers exactly.
"""
from __future__ import annotations

import itertools
import json
import math
import pathlib
import time
from collections import Counter

import pytest
from conftest import array_mask, box_supports

from latinbox.arrays import Array3D, sample_binomial, sample_green_blue, validate_latin_box
from latinbox.enumeration import (
    count_latin_boxes,
    count_rectangles_exact,
    fixed_point,
    permanent_bounds,
    q_small,
)
from latinbox.finders import (
    StagedParams,
    find_block_recursive,
    find_exact,
    find_plane_matching,
    find_staged,
)
from latinbox.labcli import (
    ExperimentConfig,
    run_hitting_time,
    run_packing_campaign,
    run_q_validation,
    run_threshold_sweep,
)
from latinbox.matching import (
    BipartiteGraph,
    UniformMatchingSampler,
    has_L_factor,
    l_factor_hall_oracle,
    permanent,
    random_regular_bipartite,
)
from latinbox.packing import deviation_report, process_pack
from latinbox.rng import substream

MANIFEST = json.loads(
    (pathlib.Path(__file__).resolve().parent.parent / "acceptance_manifest.json").read_text()
)


def _report(tag: str, detail: str) -> None:
    print(f"{tag}: PASS ({detail})")


def test_criterion_01_exact_counts() -> None:
    spec = MANIFEST["exact_counts"]
    t0 = time.monotonic()
    for dims, expect in [((2, 2, 2), 2), ((3, 3, 3), 12), ((2, 3, 3), 12)]:
        assert count_latin_boxes(*dims) == expect
        assert len(box_supports(*dims)) == expect
    for m in range(1, 5):
        for n in range(m, 5):
            assert count_rectangles_exact(m, n) == count_latin_boxes(m, n, n)
    wall = time.monotonic() - t0
    assert wall < spec["max_seconds"]
    _report("criterion 01 exact counts", f"wall {wall:.3f}s")


def test_criterion_02_block_probability() -> None:
    spec = MANIFEST["block_probability"]
    t0 = time.monotonic()
    q2 = q_small(2)
    assert list(q2.coeffs) == [0, 0, 0, 0, 2, 0, 0, 0, -1]
    fp2 = fixed_point(q2)
    assert abs(fp2 - spec["q2_fixed_point"]) <= spec["q2_tolerance"]
    fp3 = fixed_point(q_small(3))
    assert abs(fp3 - spec["q3_fixed_point"]) <= spec["q3_tolerance"]
    wall = time.monotonic() - t0
    assert wall < spec["max_seconds"]
    _report("criterion 02 block probability", f"fp2={fp2:.6f} fp3={fp3:.6f} wall {wall:.3f}s")


def test_criterion_03_monte_carlo_bridge(tmp_path: pathlib.Path) -> None:
    spec = MANIFEST["monte_carlo_bridge"]
    t0 = time.monotonic()
    worst = 0.0
    s2 = run_q_validation(2, spec["order2_ps"], spec["trials"],
                          seed=MANIFEST["master_seed"], out=str(tmp_path / "o2"))
    s3 = run_q_validation(3, spec["order3_ps"], spec["trials"],
                          seed=MANIFEST["master_seed"], out=str(tmp_path / "o3"))
    for summary in (s2, s3):
        for row in summary["rows"]:
            assert abs(row["z"]) <= spec["z_limit"], row
            worst = max(worst, abs(row["z"]))
    wall = time.monotonic() - t0
    assert wall < spec["max_seconds"]
    _report("criterion 03 monte carlo bridge", f"max|z|={worst:.2f} wall {wall:.1f}s")


def test_criterion_04_finder_oracle_equivalence() -> None:
    spec = MANIFEST["finder_oracle"]
    validated = 0

    def check_success(outcome, arr) -> int:
        if outcome.status != "success":
            return 0
        assert validate_latin_box(outcome.result, arr, require_proper=True)
        return 1

    # exhaustive sweep of every 2x2x2 array
    sup222 = box_supports(2, 2, 2)
    import numpy as np
    for bits in range(256):
        cube = np.array([(bits >> i) & 1 for i in range(8)], dtype=bool).reshape(2, 2, 2)
        arr = Array3D.from_bool_cube(cube)
        expect = any(s & array_mask(arr) == s for s in sup222)
        out = find_exact(arr)
        assert (out.status == "success") == expect, bits
        validated += check_success(out, arr)

    # randomized equivalence per shape
    for dims, p in zip(spec["shapes"], spec["densities"]):
        m, n, k = dims
        sup = box_supports(m, n, k)
        rng = substream(MANIFEST["master_seed"], *spec["seed_path"], m, n, k)
        for _ in range(spec["random_arrays_per_shape"]):
            arr = Array3D.from_bool_cube(rng.random((m, n, k)) < p)
            expect = any(s & array_mask(arr) == s for s in sup)
            out = find_exact(arr)
            assert (out.status == "success") == expect
            validated += check_success(out, arr)
    assert validated >= spec["min_validated_successes"]

    # every other finder's successes validate as well
    for n in (2, 3, 4, 8):
        arr = Array3D.full(n, n, n)
        validated += check_success(find_block_recursive(arr), arr)
    arr = Array3D.full(6, 6, 6)
    for uniform in ("exact", "fast"):
        out = find_plane_matching(arr, uniform=uniform, seed=substream(5, uniform))
        assert out.status == "success"
        validated += check_success(out, arr)
    dense = sample_binomial(8, 8, 8, 0.95, substream(62, "m"))
    validated += check_success(find_plane_matching(dense, seed=substream(62, "f"), p=0.95), dense)
    tuned = StagedParams(eps=0.5, symbol_budget_low=8, symbol_budget_high=8,
                         degree_threshold=math.log(16) / 3.0, retries=10)
    for seed in range(4):
        ca = sample_green_blue(16, 24, 0.5, substream(900 + seed, "model"))
        out = find_staged(ca, tuned, seed=substream(900 + seed, "staged"))
        assert out.status == "success"
        validated += check_success(out, ca.combined())
    _report("criterion 04 finder oracle equivalence", f"{validated} successes validated")


def _factorial_expansion_permanent(n: int, adj: list[int]) -> int:
    total = 0
    for perm in itertools.permutations(range(n)):
        prod = 1
        for i, j in enumerate(perm):
            if not (adj[i] >> j) & 1:
                prod = 0
                break
        total += prod
    return total


def test_criterion_05_permanent() -> None:
    spec = MANIFEST["permanent"]
    rng = substream(MANIFEST["master_seed"], "perm")
    checked = 0
    for n, reps in zip(range(1, spec["max_n"] + 1), spec["per_n"]):
        for _ in range(reps):
            adj = [int(x) for x in rng.integers(0, 1 << n, size=n)]
            assert permanent(BipartiteGraph(n, adj)) == _factorial_expansion_permanent(n, adj)
            checked += 1
    assert checked == spec["total_matrices"]

    sandwiched = 0
    for n in range(2, spec["sandwich_max_n"] + 1):
        for k in range(1, n + 1):
            for s in range(spec["sandwich_seeds_per_pair"]):
                G = random_regular_bipartite(n, k, substream(s, "reg", n, k))
                lo, hi = permanent_bounds(n, k)
                log_per = math.log(permanent(G))
                assert lo - 1e-9 <= log_per <= hi + 1e-9, (n, k, s)
                sandwiched += 1
    _report("criterion 05 permanent",
            f"{checked} matrices agree, {sandwiched} regular samples sandwiched")


def _enumerate_pms(G: BipartiteGraph) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(row: int, used: int, cur: list[int]) -> None:
        if row == G.n:
            out.append(tuple(cur))
            return
        avail = G.adj[row] & ~used
        while avail:
            b = avail & -avail
            cur.append(b.bit_length() - 1)
            rec(row + 1, used | b, cur)
            cur.pop()
            avail ^= b

    rec(0, 0, [])
    return out


def test_criterion_06_matching_kernel() -> None:
    from scipy import stats

    spec = MANIFEST["matching"]
    graphs = {
        "complete3": BipartiteGraph.complete(3),
        "complete4_minus_edge": BipartiteGraph(4, [0b0111, 0b1111, 0b1111, 0b1111]),
        "cycle5": BipartiteGraph(5, [(1 << i) | (1 << ((i + 1) % 5)) for i in range(5)]),
        "dense5": BipartiteGraph(5, [0b11111, 0b11110, 0b11101, 0b11011, 0b10111]),
    }
    for name, G in graphs.items():
        pms = _enumerate_pms(G)
        assert len(pms) == permanent(G)
        sampler = UniformMatchingSampler(G)
        per_pm = spec["draws_per_matching"]
        rng = substream(MANIFEST["master_seed"], "chi", name)
        counts = Counter(
            tuple(sampler.sample(rng).as_permutation(G.n))
            for _ in range(per_pm * len(pms))
        )
        assert set(counts) <= set(pms)
        chi2 = sum((counts.get(pm, 0) - per_pm) ** 2 / per_pm for pm in pms)
        critical = stats.chi2.ppf(1.0 - spec["chi_square_alpha"], len(pms) - 1)
        assert chi2 < critical, (name, chi2, critical)

    for trial in range(spec["hall_trials"]):
        rng = substream(trial, "hall")
        n = int(rng.integers(2, 7))
        G = BipartiteGraph(n, [int(x) for x in rng.integers(0, 1 << n, size=n)])
        L = int(rng.integers(0, n + 1))
        assert has_L_factor(G, L) == l_factor_hall_oracle(G, L)
    _report("criterion 06 matching kernel",
            f"{len(graphs)} chi-square graphs, {spec['hall_trials']} Hall trials")


def test_criterion_07_packing() -> None:
    spec = MANIFEST["packing"]
    passing = 0
    worst_y = worst_z = 0.0
    for seed in spec["seeds"]:
        t0 = time.monotonic()
        traj = process_pack(spec["n"], spec["horizon"], seed=seed)
        rep = deviation_report(traj)
        wall = time.monotonic() - t0
        assert wall < spec["max_seconds_per_seed"]
        worst_y = max(worst_y, rep["sup_deg_dev"])
        worst_z = max(worst_z, rep["sup_codeg_dev"])
        if rep["sup_deg_dev"] <= spec["band"] and rep["sup_codeg_dev"] <= spec["band"]:
            passing += 1
    assert passing >= spec["min_passing_seeds"], (passing, worst_y, worst_z)
    _report("criterion 07 packing",
            f"{passing}/{len(spec['seeds'])} seeds in band, "
            f"sup devs {worst_y:.4f}/{worst_z:.4f}")


def test_criterion_08_hitting_time(tmp_path: pathlib.Path) -> None:
    spec = MANIFEST["hitting_time"]
    t0 = time.monotonic()
    cfg = ExperimentConfig(kind="hitting", n=spec["n"], eps=spec["eps"],
                           trials=spec["trials"], seed=spec["seed"], out=str(tmp_path))
    summary = run_hitting_time(cfg)
    wall = time.monotonic() - t0
    assert summary["ordered"] is True
    assert summary["invalid_trials"] == 0
    assert summary["valid_trials"] == spec["trials"]
    assert summary["equality_rate"] >= spec["equality_floor"]
    assert wall < spec["max_seconds"]
    _report("criterion 08 hitting time",
            f"equality {summary['equality_rate']:.3f} >= {spec['equality_floor']}, "
            f"wall {wall:.0f}s")


def test_criterion_09_threshold_order(tmp_path: pathlib.Path) -> None:
    spec = MANIFEST["threshold_order"]
    n, eps = spec["n"], spec["eps"]
    lo_f, hi_f = spec["bracket_factors"]
    theory = {
        "flat": math.log(n) / n,
        "deep": 2.0 * math.log(n) / ((1.0 + eps) * n),
    }
    t0 = time.monotonic()
    fitted = {}
    for shape in ("flat", "deep"):
        cfg = ExperimentConfig(
            kind="sweep", n=n, eps=eps, shape=shape,
            p_grid=spec[shape]["grid"], trials=spec["trials_per_point"],
            seed=spec["seed"], out=str(tmp_path / shape),
        )
        summary = run_threshold_sweep(cfg)
        p50 = summary["p50"]
        bracket = (lo_f * theory[shape], hi_f * theory[shape])
        assert bracket[0] <= p50 <= bracket[1], (shape, p50, bracket)
        fitted[shape] = p50
    wall = time.monotonic() - t0
    assert wall < spec["max_seconds"]
    _report("criterion 09 threshold order",
            f"flat p50={fitted['flat']:.4f} deep p50={fitted['deep']:.4f} "
            f"wall {wall:.1f}s")


def test_criterion_10_determinism(tmp_path: pathlib.Path) -> None:
    spec = MANIFEST["determinism"]

    def tree_bytes(root: pathlib.Path) -> dict[str, bytes]:
        return {
            p.name: p.read_bytes()
            for p in sorted(root.iterdir())
            if not p.name.endswith(".times.txt")  # timings live in the sidecar
        }

    pairs = 0
    for rep in ("a", "b"):
        run_threshold_sweep(ExperimentConfig(**spec["sweep"], out=str(tmp_path / f"sw{rep}")))
        run_hitting_time(ExperimentConfig(**spec["hitting"], out=str(tmp_path / f"ht{rep}")))
        q = spec["qval"]
        run_q_validation(q["n0"], q["ps"], q["trials"], seed=q["seed"],
                         out=str(tmp_path / f"qv{rep}"))
        pk = spec["pack"]
        run_packing_campaign(pk["ns"], pk["seeds"], record_every=pk["record_every"],
                             out=str(tmp_path / f"pk{rep}"))
    for kind in ("sw", "ht", "qv", "pk"):
        first = tree_bytes(tmp_path / f"{kind}a")
        second = tree_bytes(tmp_path / f"{kind}b")
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], (kind, name)
            pairs += 1
    _report("criterion 10 determinism", f"{pairs} artifacts byte-identical on re-run")
