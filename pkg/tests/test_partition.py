import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocover.core import DomainError, WeightedPointSet
from geocover.partition import build_cut_lines, max_strip_weight

from conftest import point_sets


def check_partition(pts, bounds, w_d, eps=None):
    cut = build_cut_lines(pts, bounds, w_d)
    x0, x1, y0, y1 = bounds
    for lines, vals, lo, hi, depth in ((cut.xs, pts.xs, x0, x1, cut.depth_x),
                                       (cut.ys, pts.ys, y0, y1, cut.depth_y)):
        assert lines[0] == lo and lines[-1] == hi
        assert all(a < b for a, b in zip(lines, lines[1:]))
        assert max_strip_weight(lines, vals, pts.ws) <= w_d
        heavy = math.fsum(pts.ws[pts.ws >= w_d].tolist())
        light = pts.total_weight - heavy
        assert len(lines) - 2 <= heavy / w_d + 2 * light / w_d + 1e-9
        if eps is not None:
            assert len(lines) - 2 <= 32 / eps
        if pts.total_weight > w_d:
            assert depth <= math.ceil(math.log2(pts.total_weight / w_d))
    return cut


def test_empty_cell():
    cut = build_cut_lines(WeightedPointSet.empty(), (0, 2, 0, 2), 1.0)
    assert cut.xs == (0, 2) and cut.ys == (0, 2)


def test_heavy_point():
    cut = build_cut_lines(WeightedPointSet.from_points([(0.5, 1.5, 3)]), (0, 2, 0, 2), 1.0)
    assert cut.xs == (0, 0.5, 2) and cut.ys == (0, 1.5, 2)


def test_bad_threshold():
    with pytest.raises(DomainError):
        build_cut_lines(WeightedPointSet.empty(), (0, 2, 0, 2), 0.0)


def test_lemma_bound_200_points(rng):
    eps = 0.25
    pts = WeightedPointSet(rng.uniform(0, 2, 200), rng.uniform(0, 2, 200), rng.uniform(0, 1, 200))
    check_partition(pts, (0, 2, 0, 2), eps * pts.total_weight / 16, eps)


@given(point_sets(min_size=1, max_size=40), st.sampled_from([0.1, 0.25, 0.5, 0.9]))
@settings(max_examples=150, deadline=None)
def test_partition_properties(pts, eps):
    if pts.total_weight == 0:
        return
    check_partition(pts, (0, 4.0625, 0, 4.0625), eps * pts.total_weight / 16, eps)


def test_duplicate_coordinates(rng):
    xs = np.repeat(rng.uniform(0, 2, 10), 20)
    pts = WeightedPointSet(xs, rng.uniform(0, 2, 200), np.ones(200))
    check_partition(pts, (0, 2, 0, 2), 5.0)
