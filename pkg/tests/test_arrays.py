"""Array containers, random models, and serialization round-trips."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latinbox import (
    Array3D,
    ArrayProcess,
    ColoredArray,
    PartialLatinBox,
    empty_shafts,
    sample_binomial,
    sample_green_blue,
    sample_process,
    shaft_degrees,
    substream,
    validate_latin_box,
)

dims_st = st.tuples(
    st.integers(1, 4), st.integers(1, 4), st.integers(1, 6)
)


@st.composite
def arrays_st(draw):
    m, n, k = draw(dims_st)
    bits = draw(st.lists(st.booleans(), min_size=m * n * k, max_size=m * n * k))
    cube = np.array(bits, dtype=bool).reshape(m, n, k)
    return Array3D.from_bool_cube(cube)


class TestArray3D:
    def test_zeros_and_full(self):
        z = Array3D.zeros(2, 3, 4)
        assert z.ones == 0 and z.dims == (2, 3, 4)
        f = Array3D.full(2, 3, 4)
        assert f.ones == 24
        assert f.density() == 1.0

    def test_set_get_cells(self):
        a = Array3D.zeros(2, 2, 3)
        a.set_cell(1, 0, 2)
        assert a.get(1, 0, 2) == 1
        assert a.get(0, 0, 2) == 0
        assert list(a.cells()) == [(1, 0, 2)]
        a.set_cell(1, 0, 2, 0)
        assert a.ones == 0

    def test_bad_index_raises(self):
        a = Array3D.zeros(2, 2, 2)
        with pytest.raises(IndexError):
            a.get(2, 0, 0)
        with pytest.raises(IndexError):
            a.set_cell(0, 0, 2)

    def test_union_and_copy(self):
        a = Array3D.from_cells(2, 2, 2, [(0, 0, 0)])
        b = Array3D.from_cells(2, 2, 2, [(1, 1, 1)])
        u = a.union(b)
        assert u.ones == 2 and a.ones == 1
        c = a.copy()
        c.set_cell(0, 1, 1)
        assert a.get(0, 1, 1) == 0

    @given(arrays_st())
    @settings(max_examples=60, deadline=None)
    def test_bool_cube_round_trip(self, arr):
        cube = arr.to_bool_cube()
        assert Array3D.from_bool_cube(cube) == arr

    @given(arrays_st())
    @settings(max_examples=60, deadline=None)
    def test_bytes_round_trip(self, arr):
        assert Array3D.from_bytes(arr.to_bytes()) == arr

    @given(arrays_st())
    @settings(max_examples=60, deadline=None)
    def test_json_round_trip(self, arr):
        assert Array3D.from_json(arr.to_json()) == arr

    def test_from_bytes_rejects_garbage(self):
        with pytest.raises(ValueError):
            Array3D.from_bytes(b"nope")
        good = Array3D.full(2, 2, 2).to_bytes()
        with pytest.raises(ValueError):
            Array3D.from_bytes(good[:-1])

    def test_hash_consistent_with_eq(self):
        a = Array3D.from_cells(2, 2, 2, [(0, 1, 1), (1, 0, 0)])
        b = Array3D.from_cells(2, 2, 2, [(1, 0, 0), (0, 1, 1)])
        assert a == b and hash(a) == hash(b)


class TestModels:
    def test_binomial_density_and_determinism(self):
        a = sample_binomial(8, 8, 8, 0.5, substream(7, "t"))
        b = sample_binomial(8, 8, 8, 0.5, substream(7, "t"))
        assert a == b
        assert 0.3 < a.density() < 0.7
        assert sample_binomial(4, 4, 4, 0.0, substream(0)).ones == 0
        assert sample_binomial(4, 4, 4, 1.0, substream(0)).ones == 64

    def test_binomial_mean_matches_p(self):
        rng = substream(11, "density")
        dens = [sample_binomial(6, 6, 6, 0.3, rng).density() for _ in range(50)]
        assert abs(float(np.mean(dens)) - 0.3) < 0.02

    def test_process_prefix_monotone(self):
        proc = sample_process(4, 6, substream(3, "proc"))
        prev = Array3D.zeros(4, 4, 6)
        for t in [0, 5, 20, 60, proc.total]:
            cur = proc.prefix(t)
            assert cur.ones == t
            for r, c, v in prev.cells():
                assert cur.get(r, c, v) == 1
            prev = cur

    def test_process_shaft_fill_time(self):
        proc = sample_process(3, 4, substream(5, "proc"))
        t = proc.shaft_fill_time()
        assert len(empty_shafts(proc.prefix(t))) == 0
        assert len(empty_shafts(proc.prefix(t - 1))) > 0

    def test_process_replay_determinism(self):
        a = sample_process(5, 7, substream(9, "x"))
        b = sample_process(5, 7, substream(9, "x"))
        assert list(a.order) == list(b.order)

    def test_process_requires_enough_symbols(self):
        with pytest.raises(ValueError):
            sample_process(5, 4, substream(0))

    def test_green_blue_invariants(self):
        ca = sample_green_blue(6, 8, 0.2, substream(13, "gb"))
        assert ca.dims == (6, 6, 8)
        for r, c, v in ca.blue.cells():
            assert ca.green.shaft_mask(r, c) == 0
        for r, c in empty_shafts(ca.green):
            assert ca.blue.shaft_mask(r, c).bit_count() == 1
        comb = ca.combined()
        assert comb.ones == ca.green.ones + ca.blue.ones
        assert len(empty_shafts(comb)) == 0

    def test_colored_array_constraints(self):
        g = Array3D.from_cells(2, 2, 2, [(0, 0, 0)])
        b = Array3D.from_cells(2, 2, 2, [(0, 1, 0), (1, 0, 0), (1, 1, 0)])
        ColoredArray(g, b)
        # blue in a green-occupied shaft
        bad = Array3D.from_cells(2, 2, 2, [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 0)])
        with pytest.raises(ValueError):
            ColoredArray(g, bad)
        # a green-empty shaft with no blue
        short = Array3D.from_cells(2, 2, 2, [(0, 1, 0), (1, 0, 0)])
        with pytest.raises(ValueError):
            ColoredArray(g, short)

    def test_shaft_degrees(self):
        arr = Array3D.from_cells(3, 3, 5, [(0, 0, 0), (0, 0, 4), (0, 1, 1)])
        d, d_m = shaft_degrees(arr, 0, 0)
        assert (d, d_m) == (2, 1)
        assert shaft_degrees(arr, 2, 2) == (0, 0)


class TestPartialLatinBox:
    def test_place_conflicts_remove(self):
        P = PartialLatinBox(3, 3, 3)
        P.place(0, 0, 1)
        assert P.conflicts(0, 2, 1) and P.conflicts(2, 0, 1)
        assert not P.conflicts(1, 1, 1)
        with pytest.raises(ValueError):
            P.place(0, 1, 1)
        P.remove(0, 0)
        P.place(0, 1, 1)
        assert P.get(0, 1) == 1 and P.get(0, 0) is None

    def test_cyclic_is_proper_and_validates(self):
        for n in (1, 2, 5):
            P = PartialLatinBox.cyclic(n)
            assert P.is_proper
            assert len(P.entries) == n * n
            assert validate_latin_box(P, Array3D.full(n, n, n), require_proper=True)

    def test_validate_rejects_unsupported_cell(self):
        P = PartialLatinBox.cyclic(3)
        arr = Array3D.full(3, 3, 3)
        r, c = 1, 2
        arr.set_cell(r, c, P.get(r, c), 0)
        assert not validate_latin_box(P, arr)

    def test_validate_rejects_duplicate_symbol(self):
        # raw constructor bypasses place(), validator must still catch it
        P = PartialLatinBox(2, 2, 2, {(0, 0): 0, (0, 1): 0})
        assert not validate_latin_box(P, Array3D.full(2, 2, 2))

    def test_validate_partial_vs_proper(self):
        P = PartialLatinBox(2, 2, 2)
        P.place(0, 0, 0)
        arr = Array3D.full(2, 2, 2)
        assert validate_latin_box(P, arr)
        assert not validate_latin_box(P, arr, require_proper=True)

    def test_validate_rejects_shape_mismatch(self):
        P = PartialLatinBox.cyclic(2)
        with pytest.raises(ValueError):
            validate_latin_box(P, Array3D.full(3, 3, 3))


class TestArrayProcess:
    def test_cell_of_matches_prefix(self):
        proc = sample_process(3, 5, substream(21, "o"))
        arr = proc.prefix(7)
        got = {proc.cell_of(int(proc.order[i])) for i in range(7)}
        assert got == set(arr.cells())

    def test_prefix_bounds(self):
        proc = sample_process(2, 3, substream(1))
        with pytest.raises(ValueError):
            proc.prefix(-1)
        with pytest.raises(ValueError):
            proc.prefix(proc.total + 1)
