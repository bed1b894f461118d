import math

import numpy as np
import pytest

from geocover.cell_solver import (M1_STRIP_DIVISOR, MULTI_STRIP_DIVISOR, approx_union_weight,
                                  build_fine_grid, max_cov_cell, max_cov_cell_m,
                                  place_k_squares_on_grid, upper_hull)
from geocover.core import DomainError, ShapeSpec, WeightedPointSet, coverage
from geocover.exact_rect import solve_exact_1
from geocover.oracle import brute_force_cell_profile
from geocover.partition import max_strip_weight

from conftest import APPENDIX_BOUNDS, APPENDIX_FIXTURE

UNIT = ShapeSpec.square()


def cell_points(rng, n, side, int_weights=True):
    xs = np.round(rng.uniform(0, side, n) * 64) / 64
    ys = np.round(rng.uniform(0, side, n) * 64) / 64
    xs, ys = np.minimum(xs, side - 1 / 64), np.minimum(ys, side - 1 / 64)
    ws = rng.integers(1, 10, n).astype(float) if int_weights else rng.uniform(0, 1, n)
    return WeightedPointSet(xs, ys, ws)


def inside_closed(p, bounds):
    x0, x1, y0, y1 = bounds
    return x0 <= p.x <= x1 and y0 <= p.y <= y1


# max_cov_cell ----------------------------------------------------------------

def test_cluster_fully_covered():
    pts = WeightedPointSet.from_points([(0.6, 0.6, 1), (0.9, 1.0, 1), (1.1, 0.7, 1)])
    assert max_cov_cell(pts, (0, 2, 0, 2), 0.5).covered_weight == 3


def test_small_cell_is_exact(rng):
    pts = cell_points(rng, 5, 2)
    assert max_cov_cell(pts, (0, 2, 0, 2), 0.25).covered_weight == solve_exact_1(pts).covered_weight


def test_large_cell_ratio(rng):
    for eps in (0.2, 0.5):
        pts = cell_points(rng, 500, 2, int_weights=False)
        got = max_cov_cell(pts, (0, 2, 0, 2), eps)
        assert got.meta == f"approx({eps})"
        assert got.covered_weight == coverage(pts, UNIT, got.placements)
        assert got.covered_weight >= (1 - eps) * solve_exact_1(pts).covered_weight
        assert inside_closed(got.placements[0], (0, 2, 0, 2))


def test_eps_domain():
    with pytest.raises(DomainError):
        max_cov_cell(WeightedPointSet.empty(), (0, 2, 0, 2), 1.0)
    with pytest.raises(DomainError):
        max_cov_cell_m(WeightedPointSet.empty(), (0, 2, 0, 2), 0.0, 1)


# matrix ------------------------------------------------------------------------

def test_fine_grid_strips(rng):
    pts = WeightedPointSet(rng.uniform(0, 3, 100), rng.uniform(0, 3, 100), np.ones(100))
    m = build_fine_grid(pts, (0, 3, 0, 3), pts.total_weight / 10)
    assert max_strip_weight(m.cut.xs, pts.xs, pts.ws) <= 10
    assert max_strip_weight(m.cut.ys, pts.ys, pts.ws) <= 10
    assert m.w.sum() == pts.total_weight
    assert m.subcell_weights().sum() == pts.total_weight


def test_empty_fine_grid():
    m = build_fine_grid(WeightedPointSet.empty(), (0, 3, 0, 3), 1.0)
    assert m.subcell_weights().shape == (1, 1) and m.subcell_weights()[0, 0] == 0


def test_block_sums_match_scan(rng):
    pts = cell_points(rng, 80, 3)
    m = build_fine_grid(pts, (0, 3, 0, 3), 4.0)
    xs, ys = np.asarray(m.cut.xs), np.asarray(m.cut.ys)
    for _ in range(50):
        c0, c1 = sorted(rng.integers(0, m.w.shape[0], 2))
        r0, r1 = sorted(rng.integers(0, m.w.shape[1], 2))
        # interleaved index 2t is line t, 2t+1 the open strip after it
        def in_range(v, lines, a, b):
            idx = np.searchsorted(lines, v)
            on = (idx < len(lines)) & (lines[np.minimum(idx, len(lines) - 1)] == v)
            pos = np.where(on, 2 * idx, 2 * idx - 1)
            return (pos >= a) & (pos <= b)
        sel = in_range(pts.xs, xs, c0, c1) & in_range(pts.ys, ys, r0, r1)
        assert m.block_sum(c0, c1, r0, r1) == pytest.approx(pts.ws[sel].sum(), abs=1e-9)


# k squares on the grid --------------------------------------------------------

def test_k1_equals_scan(rng):
    pts = cell_points(rng, 40, 4)
    m = build_fine_grid(pts, (0, 4, 0, 4), 2.0)
    val, pl = place_k_squares_on_grid(m, 1)
    assert val == m.all_single_weights().max()
    assert place_k_squares_on_grid(m, 1, engine="exhaustive")[0] == val


def test_two_clusters():
    pts = WeightedPointSet.from_points([(0.2, 0.2, 1), (0.4, 0.3, 2), (3.0, 3.0, 4)])
    m = build_fine_grid(pts, (0, 4, 0, 4), 0.5)
    for engine in ("exhaustive", "dp", "auto"):
        assert place_k_squares_on_grid(m, 2, engine=engine)[0] == 7


def test_k_domain():
    m = build_fine_grid(WeightedPointSet.from_points([(1, 1, 1)]), (0, 2, 0, 2), 0.5)
    with pytest.raises(DomainError):
        place_k_squares_on_grid(m, 0)
    with pytest.raises(DomainError):
        place_k_squares_on_grid(m, 3, b=2)


def test_undercount_bounded(rng):
    for _ in range(20):
        pts = cell_points(rng, 60, 4, int_weights=False)
        thr = pts.total_weight / 12
        m = build_fine_grid(pts, (0, 4, 0, 4), thr)
        for k in (1, 2, 3):
            val, pl = place_k_squares_on_grid(m, k)
            exact = coverage(pts, UNIT, pl)
            assert val <= exact + 1e-9
            assert exact <= val + 4 * k * thr + 1e-9
            assert approx_union_weight(m, pl) == pytest.approx(val)


def test_dp_matches_exhaustive(rng):
    for _ in range(60):
        pts = cell_points(rng, int(rng.integers(1, 7)), 3)
        m = build_fine_grid(pts, (0, 3, 0, 3), 0.5)
        for k in (1, 2, 3):
            a = place_k_squares_on_grid(m, k, engine="exhaustive")
            b = place_k_squares_on_grid(m, k, engine="dp")
            assert a[0] == b[0]


# profiles ---------------------------------------------------------------------

def test_upper_hull():
    assert upper_hull([0, 3, 4, 6]) == [(0, 0), (1, 3), (3, 6)]
    assert upper_hull([0, 0, 0]) == [(0, 0), (2, 0)]
    assert upper_hull([0, 1, 2, 3]) == [(0, 0), (3, 3)]


def test_empty_profile():
    prof = max_cov_cell_m(WeightedPointSet.empty(), (0, 6, 0, 6), 0.5, 4)
    assert prof.F == [0.0] * 5 and prof.hull == [(0, 0.0), (4, 0.0)]


def test_full_tiling(rng):
    eps = 0.9  # cell side 7, 49 squares tile it
    pts = cell_points(rng, 12, 6.6)
    prof = max_cov_cell_m(pts, (0, 7, 0, 7), eps, 49)
    assert prof.F[49] == pts.total_weight


def test_profile_ratio_and_shape(rng):
    eps = 0.5
    for _ in range(15):
        pts = cell_points(rng, int(rng.integers(1, 12)), 4)
        bounds = (0, 4, 0, 4)
        prof = max_cov_cell_m(pts, bounds, eps, 3)
        opt = brute_force_cell_profile(pts, bounds, 3)
        for k in range(1, 4):
            assert prof.F[k] >= (1 - eps / 3) * opt[k] - 1e-9
            assert coverage(pts, UNIT, prof.placements[k]) >= prof.F[k] - 1e-9
            assert all(inside_closed(p, bounds) for p in prof.placements[k])
        assert all(a <= b for a, b in zip(prof.F, prof.F[1:]))
        hull = dict(prof.hull)
        ks = sorted(hull)
        for k, f in enumerate(prof.F):
            i = np.searchsorted(ks, k)
            if ks[i] == k:
                assert hull[k] >= f
            else:
                (k0, f0), (k1, f1) = (ks[i - 1], hull[ks[i - 1]]), (ks[i], hull[ks[i]])
                assert f0 + (f1 - f0) * (k - k0) / (k1 - k0) >= f - 1e-9
        slopes = [(f1 - f0) / (k1 - k0) for (k0, f0), (k1, f1) in zip(prof.hull, prof.hull[1:])]
        assert all(a > b for a, b in zip(slopes, slopes[1:]))


def test_appendix_fixture_non_concave():
    pts = WeightedPointSet.from_points([(x, y, 1.0) for x, y in APPENDIX_FIXTURE])
    m = build_fine_grid(pts, APPENDIX_BOUNDS, 0.5)
    F = [place_k_squares_on_grid(m, k, engine="exhaustive")[0] for k in (1, 2, 3)]
    assert F == [3, 4, 6]
    prof = max_cov_cell_m(pts, APPENDIX_BOUNDS, 0.5, 3)
    assert prof.F == [0, 3, 4, 6]
    assert (2, 4.0) not in prof.hull and prof.hull == [(0, 0), (1, 3), (3, 6)]


def test_constants():
    assert (M1_STRIP_DIVISOR, MULTI_STRIP_DIVISOR) == (16, 432)
