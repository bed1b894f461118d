"""Shifted-grid drivers: one square (four 2x2 grids) and m squares (s = ceil(6/eps) grids)."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import allocator
from .cell_solver import ProfileTable, max_cov_cell, max_cov_cell_m
from .core import (DomainError, GridSpec, Placement, PlacementSet, ShapeSpec, WeightedPointSet,
                   covered_mask, group_by_cell, make_placement_set)
from .exact_rect import solve_exact_1, sweep_cells

_UNIT = ShapeSpec.square()
M1_SHIFTS = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))
# Budgets up to this size are also tried with every smaller budget so that
# the result is monotone in m.
PREFIX_BUDGETS = 64


def _check_eps(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def grid_side(epsilon: float) -> int:
    """Cell side ``ceil(6 / eps)``; the tiny slack absorbs 6/0.2 = 30.000000000000004."""
    return math.ceil(6.0 / epsilon - 1e-9)


@dataclass
class _Cells:
    keys: np.ndarray
    order: np.ndarray
    starts: np.ndarray
    grid: GridSpec

    def __len__(self) -> int:
        return len(self.keys)

    def members(self, c: int) -> np.ndarray:
        return self.order[self.starts[c]:self.starts[c + 1]]

    def bounds(self, c: int) -> tuple[float, float, float, float]:
        d, ax, ay = self.grid.delta, self.grid.ax, self.grid.ay
        i, j = int(self.keys[c, 0]), int(self.keys[c, 1])
        return (ax + i * d, ax + (i + 1) * d, ay + j * d, ay + (j + 1) * d)

    def lookup(self) -> dict[tuple[int, int], int]:
        return {(int(k[0]), int(k[1])): c for c, k in enumerate(self.keys)}


def _cells(points: WeightedPointSet, grid: GridSpec) -> _Cells:
    keys, order, starts = group_by_cell(points.xs, points.ys, grid)
    return _Cells(keys, order, starts, grid)


def best_square_per_cell(points: WeightedPointSet, cells: _Cells, epsilon: float
                         ) -> tuple[np.ndarray, list[Placement]]:
    """Per cell, a square within ``1 - eps`` of the best for the cell's points.

    Cells with fewer than ``(1/eps)^2`` points are solved exactly (batched
    sweep); larger cells go through the cut-line approximation. Values are the
    weight of the cell's own points under the returned square.
    """
    sizes = np.diff(cells.starts)
    small = sizes < (1.0 / epsilon) ** 2
    values = np.zeros(len(cells))
    places: list[Placement] = [Placement(0.0, 0.0)] * len(cells)
    if small.any():
        idx = np.flatnonzero(small)
        sub_order = np.concatenate([cells.members(c) for c in idx]) if len(idx) else np.empty(0, np.intp)
        sub_starts = np.concatenate(([0], np.cumsum(sizes[idx])))
        w, bx, by = sweep_cells(points, sub_order, sub_starts)
        for t, c in enumerate(idx):
            values[c] = w[t]
            places[c] = Placement(float(bx[t]), float(by[t]))
    for c in np.flatnonzero(~small):
        sub = points.subset(cells.members(c))
        res = max_cov_cell(sub, cells.bounds(c), epsilon)
        values[c] = res.covered_weight
        places[c] = res.placements[0]
    return values, places


def _local_points(points: WeightedPointSet, cells: _Cells, chosen, lookup=None) -> WeightedPointSet:
    """Points that squares anchored in the ``chosen`` cells can reach.

    A unit square whose top-left corner lies in the closed cell ``(i, j)``
    (side >= 2) only meets cells ``i..i+1`` by ``j-1..j+1``; the ``j+1`` row
    matters only for points exactly on the cell's top edge.
    """
    if lookup is None:
        lookup = cells.lookup()
    want: set[int] = set()
    for c in chosen:
        i, j = int(cells.keys[c, 0]), int(cells.keys[c, 1])
        for di in (0, 1):
            for dj in (-1, 0, 1):
                k = lookup.get((i + di, j + dj))
                if k is not None:
                    want.add(k)
    if not want:
        return WeightedPointSet.empty()
    idx = np.sort(np.concatenate([cells.members(c) for c in sorted(want)]))
    return points.subset(idx)


def _local_weight(local: WeightedPointSet, placements) -> float:
    mask = covered_mask(local, _UNIT, placements)
    return math.fsum(local.ws[mask].tolist())


def solve_m1(points: WeightedPointSet, epsilon: float) -> PlacementSet:
    """One unit square within ``1 - eps`` of optimal, via four shifted 2x2 grids."""
    _check_eps(epsilon)
    if len(points) == 0:
        return PlacementSet((Placement(0.0, 0.0),), 0.0, f"approx({epsilon})")
    best_w, best_p = -1.0, None
    for ax, ay in M1_SHIFTS:
        cells = _cells(points, GridSpec(2.0, ax, ay))
        values, places = best_square_per_cell(points, cells, epsilon)
        lookup = cells.lookup()
        # cell values only count the cell's own points; rank by exact local weight
        for c in range(len(cells)):
            local = _local_points(points, cells, [c], lookup)
            w = _local_weight(local, [places[c]])
            if w > best_w:
                best_w, best_p = w, places[c]
    return make_placement_set(points, _UNIT, [best_p], f"approx({epsilon})")


def _materialize(profiles: list[ProfileTable], alloc: allocator.Allocation, m: int,
                 fallback: Placement) -> list[Placement]:
    out: list[Placement] = []
    for prof, k in zip(profiles, alloc.counts):
        if k:
            out.extend(prof.placements[k])
    anchor = out[0] if out else fallback
    while len(out) < m:
        out.append(anchor)
    return out[:m]


def _solve_shift(points: WeightedPointSet, epsilon: float, m: int, s: int, shift: int,
                 profile_cache: dict) -> tuple[float, int, list[Placement]]:
    cells = _cells(points, GridSpec(float(s), float(shift), float(shift)))
    eps_sel = epsilon ** 2 / 9
    values, _ = best_square_per_cell(points, cells, eps_sel)
    top = allocator.select_top_m_cells(values.tolist(), m)
    b = min(m, s * s)
    profiles: list[ProfileTable] = []
    for c in top:
        members = cells.members(c)
        key = (members.tobytes(), b)
        prof = profile_cache.get(key)
        if prof is None:
            prof = max_cov_cell_m(points.subset(members), cells.bounds(c), epsilon, b,
                                  cell=tuple(int(v) for v in cells.keys[c]))
            profile_cache[key] = prof
        profiles.append(prof)
    local = _local_points(points, cells, top)
    fallback = Placement(float(points.xs[0]), float(points.ys[0]))
    budgets = range(1, m + 1) if m <= PREFIX_BUDGETS else (m,)
    best = (-1.0, 0, [])
    for mm in budgets:
        # the first mm selected cells are exactly the top-mm cells
        sub = profiles[:mm]
        bb = min(mm, s * s)
        trimmed = [_truncate(p, bb) for p in sub]
        alloc = allocator.allocate(trimmed, mm, epsilon)
        placements = _materialize(trimmed, alloc, m, fallback)
        w = _local_weight(local, placements)
        if w > best[0]:
            best = (w, mm, placements)
    return best


def _truncate(p: ProfileTable, b: int) -> ProfileTable:
    if p.b == b:
        return p
    return ProfileTable(p.cell, p.F[:b + 1], p.placements[:b + 1])


def solve_m(points: WeightedPointSet, epsilon: float, m: int, threads: int = 1) -> PlacementSet:
    """``m`` unit squares within ``1 - eps`` of optimal.

    For each of the ``s = ceil(6/eps)`` diagonal shifts of the side-``s`` grid:
    rank cells by a single-square estimate, build k-square profiles for the
    top ``m`` cells, allocate the budget, and keep the best exact result.
    """
    _check_eps(epsilon)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    meta = f"approx({epsilon})"
    if len(points) == 0:
        return PlacementSet(tuple(Placement(0.0, 0.0) for _ in range(m)), 0.0, meta)
    s = grid_side(epsilon)
    cache: dict = {}

    def run(shift: int):
        return _solve_shift(points, epsilon, m, s, shift, cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(s)))
    else:
        results = [run(i) for i in range(s)]
    best_w, best_p = -1.0, None
    for w, _, placements in results:
        if w > best_w:
            best_w, best_p = w, placements
    return make_placement_set(points, _UNIT, best_p, meta)


# shapes ---------------------------------------------------------------------


def _restore_coords(values: np.ndarray, scaled: np.ndarray, factor: float):
    lookup = dict(zip(scaled.tolist(), values.tolist()))
    return lambda v: lookup.get(v, v * factor)


def solve(points: WeightedPointSet, shape: ShapeSpec, epsilon: float, m: int,
          exact: bool = False, threads: int = 1, seed: int = 0) -> PlacementSet:
    """Dispatch on shape; rectangles are rescaled to unit squares and mapped back."""
    if shape.kind != "rectangle":
        from .shapes_ext import solve_general
        return solve_general(points, shape, epsilon, m, seed=seed, threads=threads)
    a, b = shape.a, shape.b
    norm = points if (a == 1.0 and b == 1.0) else points.scaled(1.0 / a, 1.0 / b)
    if exact and m == 1:
        res = solve_exact_1(norm)
    elif m == 1:
        res = solve_m1(norm, epsilon)
    else:
        res = solve_m(norm, epsilon, m, threads=threads)
    if norm is points:
        return res
    # snap coordinates that came from input points back to their original values
    fx = _restore_coords(points.xs, norm.xs, a)
    fy = _restore_coords(points.ys, norm.ys, b)
    back = [Placement(fx(p.x), fy(p.y)) for p in res.placements]
    return make_placement_set(points, shape, back, res.meta)
