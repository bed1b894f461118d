"""Brute-force reference solvers. Exponential by design, guarded by size caps."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .core import (CapExceededError, DomainError, Placement, PlacementSet, ShapeSpec,
                   WeightedPointSet, make_placement_set)

_UNIT = ShapeSpec.square()
MAX_N_MULTI = 24
MAX_N_SINGLE = 200


def _to_masks(inside: np.ndarray) -> list[int]:
    """Rows of a boolean matrix as Python int bitmasks (bit i = point i)."""
    n = inside.shape[1]
    if n == 0:
        return [0] * inside.shape[0]
    packed = np.packbits(inside, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def _mask_weight(mask: int, ws: list[float]) -> float:
    total = 0.0
    i = 0
    while mask:
        if mask & 1:
            total += ws[i]
        mask >>= 1
        i += 1
    return total


def _maximal(masks: list[int]) -> list[int]:
    """Indices of distinct masks not strictly contained in another mask (first occurrence kept)."""
    seen: dict[int, int] = {}
    for i, mk in enumerate(masks):
        seen.setdefault(mk, i)
    # anything contained in another mask is contained in a maximal one, so
    # checking against already-kept masks in decreasing popcount order suffices
    by_size = sorted(seen.items(), key=lambda kv: (-kv[0].bit_count(), kv[1]))
    kept: list[tuple[int, int]] = []
    for mk, i in by_size:
        if mk == 0:
            continue
        if any((mk | o) == o for o, _ in kept):
            continue
        kept.append((mk, i))
    return sorted(i for _, i in kept)


def _best_combo(masks: list[int], ws: list[float], m: int) -> tuple[float, tuple[int, ...]]:
    keep = _maximal(masks)
    if not keep:
        return 0.0, ()
    size = min(m, len(keep))
    best, arg = -1.0, ()
    for combo in itertools.combinations(keep, size):
        u = 0
        for i in combo:
            u |= masks[i]
        val = _mask_weight(u, ws)
        if val > best:
            best, arg = val, combo
    return best, arg


def _square_candidate_masks(points: WeightedPointSet):
    xs, ys = points.xs, points.ys
    ux = np.unique(xs)
    uy = np.unique(ys)
    inx = (ux[:, None] <= xs[None, :]) & (xs[None, :] <= ux[:, None] + 1.0)
    iny = (uy[:, None] - 1.0 <= ys[None, :]) & (ys[None, :] <= uy[:, None])
    return ux, uy, inx, iny


def brute_force_squares(points: WeightedPointSet, m: int) -> PlacementSet:
    """Exact optimum for ``m`` unit squares over canonical corner positions.

    Candidate corners are ``(px_a, py_b)``: left edge through some point's x,
    top edge through some point's y.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    n = len(points)
    if (m == 1 and n > MAX_N_SINGLE) or (m >= 2 and n > MAX_N_MULTI):
        raise CapExceededError(f"oracle caps exceeded (n={n}, m={m})")
    if n == 0:
        return PlacementSet(tuple(Placement(0.0, 0.0) for _ in range(m)), 0.0, "oracle")
    ux, uy, inx, iny = _square_candidate_masks(points)
    if m == 1:
        # weight[a, b] = sum_p w_p [inx[a, p]] [iny[b, p]]
        weight = (inx * points.ws[None, :]) @ iny.T.astype(np.float64)
        a, b = np.unravel_index(int(np.argmax(weight)), weight.shape)
        return make_placement_set(points, _UNIT, [Placement(float(ux[a]), float(uy[b]))], "oracle")
    inside = (inx[:, None, :] & iny[None, :, :]).reshape(len(ux) * len(uy), n)
    masks = _to_masks(inside)
    _, combo = _best_combo(masks, points.ws.tolist(), m)
    chosen = [Placement(float(ux[i // len(uy)]), float(uy[i % len(uy)])) for i in combo]
    while len(chosen) < m:
        chosen.append(chosen[0] if chosen else Placement(float(ux[0]), float(uy[0])))
    return make_placement_set(points, _UNIT, chosen, "oracle")


def brute_force_cell_profile(cell_points: WeightedPointSet, cell_bounds, b: int) -> list[float]:
    """Exact ``Opt(c, k)`` for ``k = 0..b``: best weight of the cell's points under ``k`` squares.

    Squares are not confined to the cell; only the cell's own points count,
    which is an upper bound on the confined optimum.
    """
    if b < 0:
        raise DomainError("b must be >= 0")
    if cell_bounds is not None and len(cell_points):
        x0, x1, y0, y1 = cell_bounds
        if not ((cell_points.xs >= x0).all() and (cell_points.xs < x1).all()
                and (cell_points.ys >= y0).all() and (cell_points.ys < y1).all()):
            raise DomainError("cell points outside the cell bounds")
    return [0.0] + [brute_force_squares(cell_points, k).covered_weight for k in range(1, b + 1)]


def dense_grid_disk_oracle(points: WeightedPointSet, shape: ShapeSpec, m: int,
                           resolution: float | None = None) -> PlacementSet:
    """Best ``m`` copies of ``shape`` with reference points on a dense square lattice.

    A lower-bound witness: every lattice placement is feasible, so the result
    never exceeds the true optimum, and it misses it only by points within
    about one lattice step of an optimal copy's boundary.
    """
    n = len(points)
    if n > 16 or m > 2 or m < 1:
        raise CapExceededError(f"dense-grid oracle caps exceeded (n={n}, m={m})")
    diam = _diameter(shape)
    if resolution is None:
        resolution = 1e-3 * diam
    if resolution > 1e-3 * diam * (1 + 1e-12):
        raise DomainError("resolution must be <= 1e-3 of the shape diameter")
    if n == 0:
        return PlacementSet(tuple(Placement(0.0, 0.0) for _ in range(m)), 0.0, "oracle")
    x0, x1, y0, y1 = _extent(shape)
    # reference points covering something lie in p - D for some point p
    gx = np.arange(points.xs.min() - x1, points.xs.max() - x0 + resolution, resolution)
    gy = np.arange(points.ys.min() - y1, points.ys.max() - y0 + resolution, resolution)
    codes = np.zeros((len(gx), len(gy)), dtype=np.int64)
    for i in range(n):
        px, py = points.xs[i], points.ys[i]
        xsel = np.flatnonzero((gx >= px - x1 - resolution) & (gx <= px - x0 + resolution))
        ysel = np.flatnonzero((gy >= py - y1 - resolution) & (gy <= py - y0 + resolution))
        if len(xsel) == 0 or len(ysel) == 0:
            continue
        X, Y = np.meshgrid(gx[xsel], gy[ysel], indexing="ij")
        hit = _contains_at_refs(shape, X.ravel(), Y.ravel(), px, py).reshape(X.shape)
        codes[np.ix_(xsel, ysel)] |= hit.astype(np.int64) << i
    # only lattice points where the code changes along a column can be new
    change = np.ones(codes.shape, dtype=bool)
    change[:, 1:] = codes[:, 1:] != codes[:, :-1]
    where = np.flatnonzero(change)
    uniq, pos = np.unique(codes.ravel()[where], return_index=True)
    first = where[pos]
    masks = [int(u) for u in uniq]
    _, combo = _best_combo(masks, points.ws.tolist(), m)
    chosen = []
    for c in combo:
        gi, gj = np.unravel_index(int(first[c]), codes.shape)
        chosen.append(Placement(float(gx[gi]), float(gy[gj])))
    while len(chosen) < m:
        chosen.append(chosen[0] if chosen else Placement(float(points.xs[0]), float(points.ys[0])))
    return make_placement_set(points, shape, chosen, "oracle")


def _diameter(shape: ShapeSpec) -> float:
    if shape.kind == "rectangle":
        return math.hypot(shape.a, shape.b)
    if shape.kind == "disk":
        return 2 * shape.radius
    v = np.asarray(shape.vertices)
    return float(np.sqrt(((v[:, None, :] - v[None, :, :]) ** 2).sum(-1)).max())


def _extent(shape: ShapeSpec) -> tuple[float, float, float, float]:
    """Bounding box of the shape relative to its reference point."""
    if shape.kind == "rectangle":
        return 0.0, shape.a, -shape.b, 0.0
    if shape.kind == "disk":
        return -shape.radius, shape.radius, -shape.radius, shape.radius
    v = np.asarray(shape.vertices)
    return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())


def _contains_at_refs(shape: ShapeSpec, rx: np.ndarray, ry: np.ndarray, px: float, py: float) -> np.ndarray:
    """Whether the copy with reference point ``(rx[i], ry[i])`` contains ``(px, py)``."""
    # translate so the copy sits at the origin: p - r must lie in the shape at origin
    origin = Placement(0.0, 0.0)
    return shape.contains(origin, px - rx, py - ry)
