import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocover.core import DomainError
from geocover.selection import WeightedValue, kth_smallest, select, top_k, weighted_median


def _median_oracle(items):
    items = sorted(items, key=lambda it: (it.value, it.tag))
    total = sum(it.weight for it in items)
    below = 0.0
    for it in items:
        if below < total / 2 and total - below - it.weight <= total / 2:
            return it
        below += it.weight
    raise AssertionError


def test_weighted_median_examples():
    items = [WeightedValue(v, 1.0, i) for i, v in enumerate([1, 2, 3])]
    assert weighted_median(items).value == 2
    assert weighted_median([WeightedValue(1, 3, 0), WeightedValue(2, 1, 1)]).value == 1


def test_weighted_median_errors():
    with pytest.raises(DomainError):
        weighted_median([])
    with pytest.raises(DomainError):
        weighted_median([WeightedValue(1, 0, 0)])


def test_weighted_median_vs_sort(rng):
    for _ in range(200):
        n = int(rng.integers(1, 60))
        vals = rng.integers(0, 10, n)  # heavy duplicates
        ws = rng.integers(0, 5, n).astype(float)
        if ws.sum() == 0:
            ws[0] = 1
        items = [WeightedValue(float(v), float(w), i) for i, (v, w) in enumerate(zip(vals, ws))]
        got = weighted_median(items)
        assert got == _median_oracle(items)
        below = sum(it.weight for it in items if (it.value, it.tag) < (got.value, got.tag))
        above = sum(it.weight for it in items if (it.value, it.tag) > (got.value, got.tag))
        assert below < ws.sum() / 2 and above <= ws.sum() / 2


def test_weighted_median_large(rng):
    items = [WeightedValue(float(v), float(w), i)
             for i, (v, w) in enumerate(zip(rng.normal(size=1000), rng.uniform(0, 1, 1000)))]
    assert weighted_median(items) == _median_oracle(items)


def test_kth_smallest_examples():
    assert kth_smallest([5, 1, 3], 2) == 3
    assert kth_smallest([5, 1, 3], 1) == 1
    with pytest.raises(DomainError):
        kth_smallest([1, 2], 0)
    with pytest.raises(DomainError):
        kth_smallest([1, 2], 3)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=80), st.data())
@settings(max_examples=300, deadline=None)
def test_kth_smallest_matches_sort(values, data):
    k = data.draw(st.integers(1, len(values)))
    assert kth_smallest(values, k) == sorted(values)[k - 1]


def test_kth_smallest_many(rng):
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        vals = rng.integers(0, 6, n).tolist()
        k = int(rng.integers(1, n + 1))
        assert kth_smallest(vals, k) == sorted(vals)[k - 1]


def test_select_with_key():
    items = [(3, "a"), (1, "b"), (2, "c")]
    assert select(items, 0, key=lambda t: t[0]) == (1, "b")


def test_top_k():
    assert top_k([5, 9, 1], 2) == [1, 0]
    assert top_k([5, 9, 1], 5) == [1, 0, 2]
    assert top_k([2, 2, 2, 1], 2) == [0, 1]


def test_top_k_vs_sort(rng):
    for _ in range(200):
        vals = rng.integers(0, 5, int(rng.integers(1, 40))).tolist()
        k = int(rng.integers(0, len(vals) + 2))
        assert top_k(vals, k) == sorted(range(len(vals)), key=lambda i: (-vals[i], i))[:k]
