import numpy as np
from hypothesis import given, settings

from geocover.core import ShapeSpec, WeightedPointSet, coverage
from geocover.exact_rect import solve_exact_1
from geocover.oracle import brute_force_squares

from conftest import point_sets, random_points

UNIT = ShapeSpec.square()


def test_empty_and_single():
    assert solve_exact_1(WeightedPointSet.empty()).covered_weight == 0
    assert solve_exact_1(WeightedPointSet.from_points([(3, 4, 5)])).covered_weight == 5


def test_matches_oracle_30_points(rng):
    for _ in range(50):
        pts = random_points(rng, 30)
        got = solve_exact_1(pts)
        assert got.covered_weight == brute_force_squares(pts, 1).covered_weight
        assert got.covered_weight == coverage(pts, UNIT, got.placements)
        assert got.meta == "exact"


def test_tie_break_smallest_position():
    # any corner x in [0, 1] covers both points; the canonical smallest is x = 0
    pts = WeightedPointSet.from_points([(0, 0, 1), (1, 0, 1)])
    got = solve_exact_1(pts)
    assert (got.placements[0].x, got.placements[0].y) == (0.0, 0.0)


@given(point_sets(min_size=1, max_size=15))
@settings(max_examples=150, deadline=None)
def test_translation_and_permutation_invariant(pts):
    base = solve_exact_1(pts).covered_weight
    assert solve_exact_1(pts.translated(3.25, -1.5)).covered_weight == base
    perm = np.random.default_rng(len(pts)).permutation(len(pts))
    assert solve_exact_1(pts.subset(perm)).covered_weight == base


@given(point_sets(min_size=1, max_size=15), point_sets(min_size=1, max_size=1))
@settings(max_examples=100, deadline=None)
def test_adding_point_never_decreases(pts, extra):
    more = WeightedPointSet(np.r_[pts.xs, extra.xs], np.r_[pts.ys, extra.ys], np.r_[pts.ws, extra.ws])
    assert solve_exact_1(more).covered_weight >= solve_exact_1(pts).covered_weight
