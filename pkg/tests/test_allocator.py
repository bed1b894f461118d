import itertools

import numpy as np
import pytest

from geocover.allocator import (GREEDY_REGIME_FACTOR, allocate, allocate_dp, allocate_greedy,
                                select_top_m_cells)
from geocover.cell_solver import ProfileTable
from geocover.core import DomainError


def prof(F, cell=0):
    return ProfileTable(cell, [float(v) for v in F])


def random_profile(rng, b, concave=False):
    if concave:
        inc = np.sort(rng.integers(0, 10, b))[::-1]
    else:
        inc = rng.integers(0, 10, b)
    return prof(np.concatenate(([0], np.cumsum(inc))))


def brute_alloc(profiles, m):
    best = -1
    for counts in itertools.product(*[range(p.b + 1) for p in profiles]):
        if sum(counts) == m:
            best = max(best, sum(p.F[c] for p, c in zip(profiles, counts)))
    return best


def test_select_top():
    assert select_top_m_cells([5, 9, 1], 2) == [1, 0]
    assert sorted(select_top_m_cells([5, 9, 1], 7)) == [0, 1, 2]


def test_dp_examples():
    a = allocate_dp([prof([0, 4, 6, 7])], 2)
    assert a.counts == (2,) and a.objective == 6
    a = allocate_dp([prof([0, 10, 10]), prof([0, 9, 9])], 2)
    assert a.counts == (1, 1) and a.objective == 19


def test_dp_saturation():
    a = allocate_dp([prof([0, 1]), prof([0, 2])], 5)
    assert a.saturated and a.counts == (1, 1) and a.padding == 3


def test_dp_errors():
    with pytest.raises(DomainError):
        allocate_dp([prof([0, 1])], -1)
    with pytest.raises(DomainError):
        allocate_dp([prof([1, 1])], 1)


def test_dp_vs_exhaustive(rng):
    for _ in range(50):
        profiles = [random_profile(rng, 4) for _ in range(5)]
        a = allocate_dp(profiles, 8)
        assert a.objective == brute_alloc(profiles, 8)
        assert sum(a.counts) == 8
        assert a.objective == sum(p.F[c] for p, c in zip(profiles, a.counts))


def test_greedy_exact_on_concave(rng):
    for _ in range(200):
        profiles = [random_profile(rng, int(rng.integers(1, 6)), concave=True)
                    for _ in range(int(rng.integers(1, 6)))]
        m = int(rng.integers(0, sum(p.b for p in profiles) + 1))
        g = allocate_greedy(profiles, m)
        assert g.objective == allocate_dp(profiles, m).objective


def test_greedy_single_cell():
    g = allocate_greedy([prof([0, 5, 9, 12])], 2)
    assert g.counts == (2,) and g.objective == 9
    g = allocate_greedy([prof([0, 5, 9, 12])], 7)
    assert g.counts == (3,) and g.padding == 4


def test_greedy_bound_and_trace(rng):
    for _ in range(300):
        b = int(rng.integers(1, 7))
        profiles = [random_profile(rng, b) for _ in range(int(rng.integers(2, 8)))]
        m = int(rng.integers(1, sum(p.b for p in profiles) + 1))
        g, d = allocate_greedy(profiles, m), allocate_dp(profiles, m)
        assert g.objective <= d.objective
        placed = sum(g.counts)
        assert m - b <= placed <= m and g.padding == m - placed
        # greedy is optimal for the number of squares it placed
        assert g.objective == allocate_dp(profiles, placed).objective
        if m >= 10 * b:
            assert g.objective >= (1 - b / m) * d.objective


def test_regime_switch():
    profiles = [prof([0, 3, 4, 6])]
    assert allocate(profiles, 2, 0.5) == allocate_dp(profiles, 2)
    m = GREEDY_REGIME_FACTOR * 16 + 1
    assert allocate(profiles, m, 0.5) == allocate_greedy(profiles, m)
