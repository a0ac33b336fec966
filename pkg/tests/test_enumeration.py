"""Exact counting, containment polynomials, and analytic bounds."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import box_supports
from latinbox import (
    Array3D,
    Polynomial,
    SizeCapError,
    contains_square,
    count_latin_boxes,
    count_rectangles_exact,
    enumerate_squares,
    fixed_point,
    fixed_points,
    iterate_block_probability,
    permanent_bounds,
    q_small,
    q_tilde,
    rectangle_count_asymptotic,
    square_supports,
)


class TestCounts:
    def test_pinned_small_counts(self):
        assert count_latin_boxes(2, 2, 2) == 2
        assert count_latin_boxes(3, 3, 3) == 12
        assert count_latin_boxes(2, 3, 3) == 12
        assert count_latin_boxes(1, 1, 1) == 1
        assert count_latin_boxes(4, 4, 4) == 576

    def test_matches_permutation_oracle(self):
        for m in range(1, 4):
            for n in range(m, 4):
                for k in range(n, 6):
                    assert count_latin_boxes(m, n, k) == len(box_supports(m, n, k))

    def test_row_column_transpose_symmetry(self):
        for m in range(1, 5):
            for n in range(m + 1, 5):
                for k in range(n, min(n + 2, 6)):
                    assert count_latin_boxes(m, n, k) == count_latin_boxes(n, m, k)

    def test_single_row_is_falling_factorial(self):
        for n in range(1, 6):
            for k in range(n, 8):
                want = math.perm(k, n)
                assert count_latin_boxes(1, n, k) == want

    def test_rectangle_route_agrees(self):
        for n in range(1, 5):
            for m in range(1, n + 1):
                assert count_rectangles_exact(m, n) == count_latin_boxes(m, n, n)

    def test_rectangle_route_wide_shapes(self):
        # n past the cell-count caps; two-row counts are n! * derangements(n)
        assert count_rectangles_exact(2, 5) == 120 * 44
        assert count_rectangles_exact(2, 6) == 720 * 265
        assert count_rectangles_exact(2, 7) == 5040 * 1854
        assert count_rectangles_exact(3, 5) == count_latin_boxes(3, 5, 5)
        assert count_rectangles_exact(5, 5) == 161280

    def test_caps(self):
        with pytest.raises(SizeCapError):
            count_latin_boxes(6, 6, 6)
        with pytest.raises(SizeCapError):
            count_latin_boxes(2, 2, 8)
        with pytest.raises(SizeCapError):
            count_rectangles_exact(8, 8)
        with pytest.raises(ValueError):
            count_latin_boxes(0, 1, 1)
        with pytest.raises(ValueError):
            count_rectangles_exact(3, 2)


class TestSquares:
    def test_square_enumeration_counts(self):
        for n0, want in [(1, 1), (2, 2), (3, 12), (4, 576)]:
            assert len(enumerate_squares(n0)) == want
            assert len(square_supports(n0)) == want
        with pytest.raises(SizeCapError):
            enumerate_squares(5)

    def test_contains_square_on_known_arrays(self):
        assert contains_square(Array3D.full(2, 2, 2))
        assert not contains_square(Array3D.zeros(2, 2, 2))
        # exactly one square present
        cells = [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
        assert contains_square(Array3D.from_cells(2, 2, 2, cells))
        assert not contains_square(Array3D.from_cells(2, 2, 2, cells[:3]))

    def test_contains_square_cap(self):
        with pytest.raises(SizeCapError):
            contains_square(Array3D.zeros(4, 4, 4))


class TestPolynomials:
    def test_polynomial_evaluation(self):
        poly = Polynomial([1.0, -2.0, 0.0, 3.0])
        assert poly.degree == 3
        for x in (0.0, 0.5, 1.0, -1.3):
            assert poly(x) == pytest.approx(1 - 2 * x + 3 * x**3, rel=1e-12)

    def test_q2_closed_form(self):
        poly = q_small(2)
        coeffs = poly.to_list()
        want = [0.0] * 9
        want[4], want[8] = 2.0, -1.0
        assert coeffs == pytest.approx(want, abs=1e-12)

    def test_q2_matches_full_enumeration(self):
        # independent route: exact containment probability by summing the
        # binomial weight of every 2x2x2 array that holds a square
        supports = box_supports(2, 2, 2)
        for p in (0.2, 0.5, 0.8, 0.9205675462109867):
            prob = 0.0
            for mask in range(1 << 8):
                if any(mask & s == s for s in supports):
                    ones = mask.bit_count()
                    prob += p**ones * (1 - p) ** (8 - ones)
            assert q_small(2)(p) == pytest.approx(prob, abs=1e-12)

    def test_q3_endpoints_and_monotone(self):
        poly = q_small(3)
        assert poly(0.0) == pytest.approx(0.0, abs=1e-12)
        assert poly(1.0) == pytest.approx(1.0, abs=1e-12)
        xs = np.linspace(0.0, 1.0, 200)
        ys = [poly(float(x)) for x in xs]
        assert all(b >= a - 1e-12 for a, b in zip(ys, ys[1:]))
        assert all(-1e-12 <= y <= 1 + 1e-12 for y in ys)

    def test_q3_inclusion_exclusion_spot_value(self):
        # independent inclusion-exclusion over the 12 square supports
        supports = square_supports(3)
        for p in (0.3, 0.85):
            prob = 0.0
            for r in range(1, len(supports) + 1):
                for comb in combinations(supports, r):
                    union = 0
                    for s in comb:
                        union |= s
                    prob += (-1) ** (r + 1) * p ** union.bit_count()
            assert q_small(3)(p) == pytest.approx(prob, abs=1e-9)

    def test_q_tilde_closed_form(self):
        for n0 in (2, 3, 5):
            poly = q_tilde(n0)
            for p in (0.1, 0.6, 0.95):
                want = 2 * p ** (n0**2) - p ** (2 * n0**2)
                assert poly(p) == pytest.approx(want, rel=1e-12)


class TestFixedPoints:
    def test_q2_fixed_point_value(self):
        fp = fixed_point(q_small(2))
        assert fp == pytest.approx(0.9205675462109867, abs=1e-7)
        assert q_small(2)(fp) == pytest.approx(fp, abs=1e-7)

    def test_q3_fixed_point_value(self):
        fp = fixed_point(q_small(3))
        assert fp == pytest.approx(0.8555791267565905, abs=1e-7)

    def test_fixed_points_all_roots(self):
        pts = fixed_points(q_small(2))
        assert len(pts) >= 1
        for x in pts:
            assert q_small(2)(x) == pytest.approx(x, abs=1e-6)
        assert fixed_point(q_small(2)) == max(pts)

    def test_no_interior_fixed_point_raises(self):
        # 0.5 + x sits strictly above the diagonal on (0, 1)
        with pytest.raises(ValueError):
            fixed_point(Polynomial([0.5, 1.0]))

    def test_iteration_diverges_away_from_threshold(self):
        fp = fixed_point(q_small(2))
        up = iterate_block_probability(q_small(2), fp + 0.02, 40)
        down = iterate_block_probability(q_small(2), fp - 0.02, 40)
        assert len(up) == 40
        assert up[-1] > 0.999
        assert down[-1] < 0.001
        stay = iterate_block_probability(q_small(2), fp, 3)
        assert stay[-1] == pytest.approx(fp, abs=1e-4)

    def test_iteration_guards(self):
        with pytest.raises(ValueError):
            iterate_block_probability(q_small(2), 1.5, 2)
        with pytest.raises(ValueError):
            iterate_block_probability(q_small(2), 0.5, -1)


class TestBounds:
    def test_permanent_bounds_ordering(self):
        for n in range(1, 9):
            for k in range(1, n + 1):
                b = permanent_bounds(n, k)
                assert b.lower_log <= b.ef_lower_log + 1e-9
                assert b.ef_lower_log <= b.upper_log + 1e-9

    def test_permanent_bounds_tight_for_complete(self):
        # k = n: both EF lower and Bregman upper collapse to ln n!
        for n in range(1, 8):
            b = permanent_bounds(n, n)
            assert b.ef_lower_log == pytest.approx(math.lgamma(n + 1), abs=1e-9)
            assert b.upper_log == pytest.approx(math.lgamma(n + 1), abs=1e-9)

    def test_rectangle_count_asymptotic_value(self):
        got = rectangle_count_asymptotic(10, 0.5, 1.0)
        want = 50.0 * (math.log(10) - 2.0 + math.log(2.0))
        assert got == pytest.approx(want, rel=1e-12)
        assert rectangle_count_asymptotic(10, 0.5, 0.5) < got

    def test_rectangle_count_asymptotic_guards(self):
        with pytest.raises(ValueError):
            rectangle_count_asymptotic(10, 1.5, 0.5)
        with pytest.raises(ValueError):
            rectangle_count_asymptotic(0, 0.5, 0.5)
        with pytest.raises(ValueError):
            rectangle_count_asymptotic(10, 0.5, 0.0)
