"""Exact best single unit square, by a plane sweep over stabbing rectangles.

A unit square with top-left corner ``(x, y)`` covers ``p`` iff
``x <= px <= x + 1`` and ``y - 1 <= py <= y``. Some optimal square has its
left edge on a point's x and its top edge on a point's y, so the sweep visits
the distinct point x-coordinates in order, keeps the points whose x lies in
``[x, x + 1]`` active, and maintains for every candidate top edge (the
distinct point y-coordinates) the active weight it would cover in a segment
tree with range add and max.
"""
from __future__ import annotations

import numba
import numpy as np

from .core import Placement, PlacementSet, WeightedPointSet, make_placement_set, ShapeSpec

_UNIT = ShapeSpec.square()


@numba.njit(cache=True)
def _tree_add(t, d, size, lo, hi, v):
    # add v on leaves [lo, hi] (inclusive)
    l = lo + size
    r = hi + size + 1
    l0 = l
    r0 = r - 1
    while l < r:
        if l & 1:
            t[l] += v
            d[l] += v
            l += 1
        if r & 1:
            r -= 1
            t[r] += v
            d[r] += v
        l >>= 1
        r >>= 1
    for node in (l0, r0):
        node >>= 1
        while node >= 1:
            a = t[2 * node]
            b = t[2 * node + 1]
            t[node] = (a if a >= b else b) + d[node]
            node >>= 1


@numba.njit(cache=True)
def _tree_argmax(t, size):
    node = 1
    while node < size:
        if t[2 * node] >= t[2 * node + 1]:
            node = 2 * node
        else:
            node = 2 * node + 1
    return node - size


@numba.njit(cache=True)
def _sweep(xs, ys, ws):
    """Best canonical square for one point set: ``(weight, x, y)``."""
    n = xs.shape[0]
    if n == 0:
        return 0.0, 0.0, 0.0
    ux = np.unique(xs)
    uy = np.unique(ys)
    ny = uy.shape[0]
    uy_minus = uy - 1.0
    lo = np.searchsorted(uy, ys)
    hi = np.searchsorted(uy_minus, ys, side="right") - 1
    order = np.argsort(xs, kind="mergesort")
    size = 1
    while size < ny:
        size *= 2
    t = np.zeros(2 * size)
    d = np.zeros(2 * size)
    for leaf in range(ny, size):
        t[size + leaf] = -np.inf
    for node in range(size - 1, 0, -1):
        a = t[2 * node]
        b = t[2 * node + 1]
        t[node] = a if a >= b else b
    best = -1.0
    bx = 0.0
    by = 0.0
    add_ptr = 0
    rem_ptr = 0
    for a in range(ux.shape[0]):
        x = ux[a]
        right = x + 1.0
        while add_ptr < n and xs[order[add_ptr]] <= right:
            k = order[add_ptr]
            _tree_add(t, d, size, lo[k], hi[k], ws[k])
            add_ptr += 1
        while rem_ptr < n and xs[order[rem_ptr]] < x:
            k = order[rem_ptr]
            _tree_add(t, d, size, lo[k], hi[k], -ws[k])
            rem_ptr += 1
        if t[1] > best:
            best = t[1]
            bx = x
            by = uy[_tree_argmax(t, size)]
    return best, bx, by


@numba.njit(cache=True)
def _sweep_cells(xs, ys, ws, order, starts):
    t = starts.shape[0] - 1
    best = np.zeros(t)
    bx = np.zeros(t)
    by = np.zeros(t)
    for c in range(t):
        idx = order[starts[c]:starts[c + 1]]
        best[c], bx[c], by[c] = _sweep(xs[idx], ys[idx], ws[idx])
    return best, bx, by


def sweep_cells(points: WeightedPointSet, order: np.ndarray, starts: np.ndarray):
    """Run the exact sweep independently on every group ``order[starts[c]:starts[c+1]]``.

    Returns arrays ``(weight, x, y)`` with one entry per group. Weights are the
    sweep's running sums; callers recompute exact coverage where it matters.
    """
    return _sweep_cells(points.xs, points.ys, points.ws,
                        np.ascontiguousarray(order, dtype=np.int64),
                        np.ascontiguousarray(starts, dtype=np.int64))


def solve_exact_1(points: WeightedPointSet) -> PlacementSet:
    """Optimal placement of one axis-parallel unit square.

    Among optimal canonical positions the lexicographically smallest
    ``(x, y)`` is returned.
    """
    if len(points) == 0:
        return PlacementSet((Placement(0.0, 0.0),), 0.0, "exact")
    _, x, y = _sweep(points.xs, points.ys, points.ws)
    return make_placement_set(points, _UNIT, [Placement(float(x), float(y))], "exact")
