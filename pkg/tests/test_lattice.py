import numpy as np
import pytest

from varharm import (AlignmentError, Domain1D, GridFunction,
                     cube_domain_ranges, default_lattices, hl_maximal,
                     lattices_for_domain, m_half, max_aligned_depth)


def test_alignment_error():
    d = Domain1D(-8.0, 8.0, 100)  # 3N = 300 not divisible by 32
    with pytest.raises(AlignmentError):
        lattices_for_domain(d, 5)


def test_max_aligned_depth():
    assert max_aligned_depth(Domain1D(0.0, 1.0, 96)) == 5   # 288 = 2^5 * 9
    assert max_aligned_depth(Domain1D(0.0, 1.0, 3)) == 0    # 9 odd
    assert max_aligned_depth(Domain1D(0.0, 1.0, 3072)) == 10


def test_roots_contain_domain_and_relative_shifts():
    d = Domain1D(-8.0, 8.0, 96)
    lats = lattices_for_domain(d, 5)
    root_len = 3 * d.length
    for lat in lats:
        assert lat.root_left <= d.left
        assert lat.root_left + root_len >= d.left + d.length
    # mutual shifts are one third of the root length
    assert lats[1].root_left - lats[0].root_left == pytest.approx(root_len / 3)
    assert lats[2].root_left - lats[1].root_left == pytest.approx(root_len / 3)


def test_cube_geometry_and_children_partition():
    d = Domain1D(-8.0, 8.0, 96)
    lat = lattices_for_domain(d, 5)[1]
    q = lat.cube(2, 1)
    a, b = q.children()
    assert a.root_cell_range()[0] == q.root_cell_range()[0]
    assert a.root_cell_range()[1] == b.root_cell_range()[0]
    assert b.root_cell_range()[1] == q.root_cell_range()[1]
    assert a.length == pytest.approx(q.length / 2)
    with pytest.raises(ValueError):
        lat.cube(2, 4)
    with pytest.raises(ValueError):
        lat.cube(6, 0)


def test_one_third_trick_exhaustive():
    # every grid interval of moderate width sits inside some cube of at most
    # six times its length, across the three shifted lattices
    d = Domain1D(0.0, 3.0, 24)  # 3N = 72 = 2^3 * 9, depth 3, deepest width 9
    lats = lattices_for_domain(d, 3)
    n = d.cells
    cube_spans = []  # in domain cell coordinates, unclipped
    for lat in lats:
        for level in range(lat.depth + 1):
            w = lat.width_cells(level)
            for j in range(1 << level):
                s = lat.offset_cells + j * w
                cube_spans.append((s, s + w))
    for width in range(5, 19):  # >= deepest_width/2, <= root_cells/4
        for s in range(0, n - width + 1):
            e = s + width
            ok = any(cs <= s and e <= ce and (ce - cs) <= 6 * width
                     for cs, ce in cube_spans)
            assert ok, f"interval [{s},{e}) has no 6x covering cube"


def test_hl_maximal_of_constant_is_one():
    d = Domain1D(-8.0, 8.0, 96)
    f = GridFunction(d, np.ones(d.cells))
    m = hl_maximal(f)
    assert np.all(m.values == 1.0)


def test_hl_maximal_indicator_at_distance():
    # chi_[0,1] evaluated at x = 2: the best lattice cube is [0, 3) from the
    # shifted system, giving average exactly 1/3
    d = Domain1D(-8.0, 8.0, 384)
    f = GridFunction.indicator(d, 0.0, 1.0)
    m = hl_maximal(f)
    assert m.values[d.cell_of(2.0)] == pytest.approx(1.0 / 3.0, abs=1e-12)
    # the all-intervals oracle does better: best interval is [0, 2 + h],
    # 24 mass cells out of 49
    mo = hl_maximal(f, exhaustive=True)
    assert mo.values[d.cell_of(2.0)] == pytest.approx(24.0 / 49.0, abs=1e-12)


def test_hl_maximal_dominated_by_exhaustive():
    d = Domain1D(-8.0, 8.0, 192)
    rng = np.random.default_rng(11)
    f = GridFunction(d, rng.standard_normal(d.cells))
    a = hl_maximal(f).values
    b = hl_maximal(f, exhaustive=True).values
    assert np.all(a <= b + 1e-12)
    assert np.all(b >= np.abs(f.values) - 1e-12)  # single cells are intervals


def test_hl_maximal_dominates_cube_averages():
    d = Domain1D(-8.0, 8.0, 96)
    rng = np.random.default_rng(12)
    f = GridFunction(d, rng.standard_normal(d.cells))
    m = hl_maximal(f).values
    a = np.abs(f.values)
    for lat in default_lattices(d):
        for cube in lat.cubes():
            s, e = cube.domain_cell_range()
            avg = a[s:e].sum() / cube.width_cells
            assert np.all(m[s:e] >= avg - 1e-12)


def test_exhaustive_oracle_rejects_large_grids():
    d = Domain1D(-8.0, 8.0, 3072)
    with pytest.raises(ValueError):
        hl_maximal(GridFunction.zero(d), exhaustive=True)


def test_m_half_indicator():
    # sqrt(chi) = chi, so M_{1/2} chi = (M chi)^2
    d = Domain1D(-8.0, 8.0, 384)
    f = GridFunction.indicator(d, 0.0, 1.0)
    m = m_half(f)
    assert m.values[d.cell_of(2.0)] == pytest.approx(1.0 / 9.0, abs=1e-12)
    base = hl_maximal(f)
    assert np.allclose(m.values, base.values ** 2)


def test_cube_domain_ranges_dedup_and_bounds():
    d = Domain1D(-8.0, 8.0, 96)
    lats = default_lattices(d)
    ranges = cube_domain_ranges(lats)
    assert len(ranges) == len(set(ranges))
    assert all(0 <= s < e <= d.cells for s, e in ranges)
    full = cube_domain_ranges(lats, full_cubes_only=True)
    assert set(full) <= set(ranges)
    widths = {e - s for s, e in full}
    assert widths <= {lats[0].width_cells(k) for k in range(lats[0].depth + 1)}
