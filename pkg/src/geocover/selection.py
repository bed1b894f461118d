"""Deterministic linear-time selection: k-th smallest and weighted median.

Both use median-of-medians pivoting (groups of five), so the worst case is
linear and the result never depends on a random source.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence, TypeVar

from .core import DomainError

T = TypeVar("T")


@dataclass(frozen=True)
class WeightedValue:
    value: float
    weight: float
    tag: int

    @property
    def key(self) -> tuple[float, int]:
        return (self.value, self.tag)


def _median_of_five(group: list, key) -> Any:
    return sorted(group, key=key)[(len(group) - 1) // 2]


def _pivot(items: list, key) -> Any:
    while len(items) > 5:
        items = [_median_of_five(items[i:i + 5], key) for i in range(0, len(items), 5)]
    return _median_of_five(items, key)


def select(items: Sequence[T], k: int, key: Callable[[T], Any]) -> T:
    """Return the element of 0-based rank ``k`` under ``key`` (keys must be distinct)."""
    if not 0 <= k < len(items):
        raise DomainError(f"rank {k} out of range for {len(items)} items")
    cur = list(items)
    while True:
        if len(cur) <= 5:
            return sorted(cur, key=key)[k]
        pk = key(_pivot(cur, key))
        less = [x for x in cur if key(x) < pk]
        if k < len(less):
            cur = less
            continue
        if k == len(less):
            return next(x for x in cur if key(x) == pk)
        k -= len(less) + 1
        cur = [x for x in cur if key(x) > pk]


def kth_smallest(items: Sequence[float], k: int) -> float:
    """``k``-th smallest (1-based) value; equal values are ordered by position."""
    if not 1 <= k <= len(items):
        raise DomainError(f"k={k} out of range 1..{len(items)}")
    tagged = list(enumerate(items))
    return select(tagged, k - 1, key=lambda t: (t[1], t[0]))[1]


def weighted_median(items: Sequence[WeightedValue]) -> WeightedValue:
    """Element ``x`` with weight-below < W/2 and weight-above <= W/2.

    Order is by ``(value, tag)``, so equal values are broken by tag.
    """
    if not items:
        raise DomainError("weighted median of an empty list")
    total = math.fsum(it.weight for it in items)
    if not total > 0:
        raise DomainError("weighted median needs a positive total weight")
    half = total / 2
    below = 0.0  # weight already known to lie strictly left of the answer
    above = 0.0
    cur = list(items)
    key = lambda it: it.key  # noqa: E731
    while True:
        piv = select(cur, (len(cur) - 1) // 2, key)
        pk = piv.key
        less = [it for it in cur if it.key < pk]
        more = [it for it in cur if it.key > pk]
        wl = math.fsum([below, math.fsum(it.weight for it in less)])
        wr = math.fsum([above, math.fsum(it.weight for it in more)])
        if wl < half and wr <= half:
            return piv
        if wl >= half:
            cur = less
            above = math.fsum([wr, piv.weight])
        else:
            cur = more
            below = math.fsum([wl, piv.weight])


def top_k(values: Sequence[float], k: int) -> list[int]:
    """Indices of the ``k`` largest values, ties broken by smaller index, largest first."""
    n = len(values)
    if k <= 0:
        return []
    if k >= n:
        return sorted(range(n), key=lambda i: (-values[i], i))
    keyed = [(-values[i], i) for i in range(n)]
    cut = select(keyed, k - 1, key=lambda t: t)
    chosen = [t for t in keyed if t <= cut]
    return [i for _, i in sorted(chosen)]
