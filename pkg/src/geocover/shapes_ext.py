"""Disks and convex polygons: critical placements, thinning and the shifted-grid scheme.

A copy placed at ``t`` covers ``p`` iff ``p - t`` lies in the shape, so the
placements covering ``p`` form the region ``p - D``. For a fixed set ``S`` of
covered points the feasible placements are the intersection of those regions,
a convex set whose vertices are pairwise boundary intersections or vertices of
a single region. Enumerating those (plus one interior point per region) gives
every maximal coverage pattern.
"""
from __future__ import annotations

import itertools
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import allocator
from .cell_solver import ProfileTable
from .core import (CONTAIN_TOL, CapExceededError, DomainError, GridSpec, Placement, PlacementSet,
                   ShapeSpec, WeightedPointSet, group_by_cell, make_placement_set)

CRITICAL_CAP = 64
MAX_EXACT_M = 3
THIN_CONSTANT = 4.0
# combinations the in-pipeline exhaustive search may examine before going greedy
EXHAUSTIVE_BUDGET = 200_000


@dataclass(frozen=True)
class CriticalPlacement:
    placement: Placement
    covered_ids: tuple[int, ...]


@dataclass(frozen=True)
class ThinnedSet:
    """A reweighted sample ``points`` standing in for a set of weight ``source_weight``."""
    points: WeightedPointSet
    r: float
    source_weight: float


# containment ----------------------------------------------------------------

def contains_matrix(shape: ShapeSpec, cx: np.ndarray, cy: np.ndarray,
                    xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """``out[c, p]``: copy at ``(cx[c], cy[c])`` contains point ``p``.

    Same arithmetic as ``ShapeSpec.contains``, broadcast over placements.
    """
    x = np.asarray(cx, dtype=np.float64)[:, None]
    y = np.asarray(cy, dtype=np.float64)[:, None]
    xs = np.asarray(xs)[None, :]
    ys = np.asarray(ys)[None, :]
    if shape.kind == "rectangle":
        return (x <= xs) & (xs <= x + shape.a) & (y - shape.b <= ys) & (ys <= y)
    if shape.kind == "disk":
        r = shape.radius
        tol = CONTAIN_TOL * max(r, 1.0)
        return (xs - x) ** 2 + (ys - y) ** 2 <= (r + tol) ** 2
    v = np.asarray(shape.vertices)
    inside = np.ones((x.shape[0], xs.shape[1]), dtype=bool)
    n = len(v)
    for i in range(n):
        ax, ay = v[i, 0] + x, v[i, 1] + y
        ex, ey = v[(i + 1) % n, 0] - v[i, 0], v[(i + 1) % n, 1] - v[i, 1]
        cross = ex * (ys - ay) - ey * (xs - ax)
        inside &= cross >= -CONTAIN_TOL * math.hypot(ex, ey)
    return inside


# critical placements --------------------------------------------------------

def _disk_candidates(xs: np.ndarray, ys: np.ndarray, r: float) -> tuple[list, list]:
    cx, cy = list(xs.tolist()), list(ys.tolist())
    n = len(xs)
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy = xs[j] - xs[i], ys[j] - ys[i]
            d2 = dx * dx + dy * dy
            if d2 == 0 or d2 > 4 * r * r:
                continue
            h = math.sqrt(max(r * r - d2 / 4, 0.0))
            d = math.sqrt(d2)
            mx, my = xs[i] + dx / 2, ys[i] + dy / 2
            ox, oy = -dy / d * h, dx / d * h
            cx += [mx + ox, mx - ox]
            cy += [my + oy, my - oy]
    return cx, cy


def _polygon_candidates(xs: np.ndarray, ys: np.ndarray, vertices) -> tuple[list, list]:
    v = np.asarray(vertices)
    k = len(v)
    # singles: every vertex of p - D, plus p - centroid as an interior point
    cen = v.mean(axis=0)
    cx = (xs[:, None] - v[None, :, 0]).ravel().tolist() + (xs - cen[0]).tolist()
    cy = (ys[:, None] - v[None, :, 1]).ravel().tolist() + (ys - cen[1]).tolist()
    # edges of p - D: from p - v[a] to p - v[a+1]
    d = -(np.roll(v, -1, axis=0) - v)           # (k, 2) edge directions
    ex, ey = d[:, 0][:, None], d[:, 1][:, None]  # edge a of the first region
    fx, fy = d[:, 0][None, :], d[:, 1][None, :]  # edge b of the second region
    den = ex * fy - ey * fx
    ok_den = np.abs(den) > 1e-15
    safe = np.where(ok_den, den, 1.0)
    n = len(xs)
    for i in range(n):
        ax, ay = xs[i] - v[:, 0], ys[i] - v[:, 1]
        for j in range(i + 1, n):
            bx, by = xs[j] - v[:, 0], ys[j] - v[:, 1]
            # solve a + t e = b + u f
            rx = bx[None, :] - ax[:, None]
            ry = by[None, :] - ay[:, None]
            t = (rx * fy - ry * fx) / safe
            u = (rx * ey - ry * ex) / safe
            hit = ok_den & (t >= -1e-12) & (t <= 1 + 1e-12) & (u >= -1e-12) & (u <= 1 + 1e-12)
            if hit.any():
                ia, _ = np.nonzero(hit)
                tt = t[hit]
                cx += (ax[ia] + tt * d[ia, 0]).tolist()
                cy += (ay[ia] + tt * d[ia, 1]).tolist()
    return cx, cy


def _candidate_positions(points: WeightedPointSet, shape: ShapeSpec) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = points.xs, points.ys
    if shape.kind == "disk":
        cx, cy = _disk_candidates(xs, ys, shape.radius)
    elif shape.kind == "polygon":
        cx, cy = _polygon_candidates(xs, ys, shape.vertices)
    else:
        poly = ShapeSpec("polygon", vertices=((0.0, 0.0), (shape.a, 0.0), (shape.a, shape.b),
                                              (0.0, shape.b)))
        cx, cy = _polygon_candidates(xs, ys, poly.vertices)
        # the rectangle's reference point is its top-left corner, the polygon's its bottom-left
        cy = [c + shape.b for c in cy]
    return np.asarray(cx, dtype=np.float64), np.asarray(cy, dtype=np.float64)


def enumerate_critical(points: WeightedPointSet, shape: ShapeSpec,
                       cap: int = CRITICAL_CAP) -> list[CriticalPlacement]:
    """Critical copies, deduplicated by covered set (first occurrence kept).

    Singles come first in point order, then pair placements in ``(i, j)``
    order. Copies covering nothing are dropped.
    """
    n = len(points)
    if n > cap:
        raise CapExceededError(f"{n} points exceed the critical-placement cap {cap}; thin first")
    if n == 0:
        return []
    cx, cy = _candidate_positions(points, shape)
    inside = contains_matrix(shape, cx, cy, points.xs, points.ys)
    _, first = np.unique(np.packbits(inside, axis=1), axis=0, return_index=True)
    out = []
    for c in sorted(first.tolist()):
        ids = tuple(np.flatnonzero(inside[c]).tolist())
        if ids:
            out.append(CriticalPlacement(Placement(float(cx[c]), float(cy[c])), ids))
    return out


# exact selection over candidate masks -----------------------------------------

def _maximal_rows(inside: np.ndarray) -> np.ndarray:
    """Indices of rows not contained in another row (rows assumed distinct), ascending."""
    counts = inside.sum(axis=1)
    order = np.lexsort((np.arange(len(inside)), -counts))
    kept: list[int] = []
    for c in order:
        if counts[c] == 0:
            continue
        if kept and np.any(np.all(inside[kept] | ~inside[c], axis=1)):
            continue
        kept.append(int(c))
    return np.asarray(sorted(kept), dtype=np.intp)


def _best_subset(inside: np.ndarray, ws: np.ndarray, k: int,
                 budget: float | None = None) -> tuple[float, list[int]] | None:
    """Exact best union of ``k`` rows (repetition allowed); None if over ``budget``."""
    keep = _maximal_rows(inside)
    if len(keep) == 0:
        return 0.0, []
    k = min(k, len(keep))
    if budget is not None and math.comb(len(keep), k) > budget:
        return None
    M = inside[keep]
    best, arg = -1.0, ()
    if k == 1:
        vals = M.astype(np.float64) @ ws
        c = int(np.argmax(vals))
        return float(vals[c]), [int(keep[c])]
    # vectorize over the last chosen row; earlier rows enumerated in order
    for head in itertools.combinations(range(len(keep)), k - 1):
        base = np.logical_or.reduce(M[list(head)], axis=0)
        tail = np.arange(head[-1] + 1, len(keep))
        if len(tail) == 0:
            continue
        vals = (M[tail] | base).astype(np.float64) @ ws
        c = int(np.argmax(vals))
        if vals[c] > best:
            best, arg = float(vals[c]), head + (int(tail[c]),)
    return best, [int(keep[c]) for c in arg]


def _greedy_subset(inside: np.ndarray, ws: np.ndarray, k: int,
                   start: list[int] | None = None) -> list[int]:
    chosen = list(start or [])
    covered = np.logical_or.reduce(inside[chosen], axis=0) if chosen else np.zeros(inside.shape[1], bool)
    while len(chosen) < k:
        gain = (inside & ~covered).astype(np.float64) @ ws
        c = int(np.argmax(gain))
        chosen.append(c)
        covered |= inside[c]
    return chosen


def solve_exact_general(points: WeightedPointSet, shape: ShapeSpec, m: int,
                        cap: int = CRITICAL_CAP, max_m: int = MAX_EXACT_M) -> PlacementSet:
    """Exact optimum for ``m`` copies: best union over ``m`` critical placements."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if m > max_m:
        raise CapExceededError(f"m = {m} exceeds the exact-solver cap {max_m}")
    crit = enumerate_critical(points, shape, cap)
    if not crit:
        return PlacementSet(tuple(Placement(0.0, 0.0) for _ in range(m)), 0.0, "exact")
    inside = np.zeros((len(crit), len(points)), dtype=bool)
    for c, cp in enumerate(crit):
        inside[c, list(cp.covered_ids)] = True
    _, picks = _best_subset(inside, points.ws, m)
    chosen = [crit[c].placement for c in picks]
    while len(chosen) < m:
        chosen.append(chosen[0])
    return make_placement_set(points, shape, chosen, "exact")


# thinning -------------------------------------------------------------------

def thin_size(n: int, r: float, b: int, c: float = THIN_CONSTANT) -> int:
    target = c * r * r * math.log(r + 2) * b ** 4
    return n if target >= n else max(1, math.ceil(target))


def thin(points: WeightedPointSet, r: float, b: int, seed: int,
         c: float = THIN_CONSTANT) -> ThinnedSet:
    """Seeded weight-proportional sample standing in for ``points``.

    Each of the ``size`` draws carries weight ``W / size``; sets no larger
    than the target size are returned unchanged.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if b < 1:
        raise DomainError(f"b must be >= 1, got {b}")
    n = len(points)
    total = points.total_weight
    size = thin_size(n, r, b, c)
    if size >= n or total == 0:
        return ThinnedSet(points, r, total)
    return ThinnedSet(_weighted_sample(points, size, seed), r, total)


def _weighted_sample(points: WeightedPointSet, size: int, seed) -> WeightedPointSet:
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(points), size=size, replace=True, p=points.ws / points.ws.sum()))
    return WeightedPointSet(points.xs[idx], points.ys[idx], np.full(size, points.total_weight / size))


def thinning_error(thinned: ThinnedSet, points: WeightedPointSet, shape: ShapeSpec,
                   probes) -> float:
    """Largest ``|w(A & U) - w(P & U)|`` over probe unions (each a list of placements)."""
    A = thinned.points
    worst = 0.0
    for placements in probes:
        cx = [p.x for p in placements]
        cy = [p.y for p in placements]
        wa = math.fsum(A.ws[contains_matrix(shape, cx, cy, A.xs, A.ys).any(axis=0)].tolist())
        wp = math.fsum(points.ws[contains_matrix(shape, cx, cy, points.xs, points.ys).any(axis=0)].tolist())
        worst = max(worst, abs(wa - wp))
    return worst


def thinning_radius(epsilon: float, sigma: float) -> float:
    """``r = 72 / (eps^3 sigma^6)``."""
    return 72.0 / (epsilon ** 3 * sigma ** 6)


# shifted-grid scheme ----------------------------------------------------------

def grid_side(epsilon: float, sigma: float) -> int:
    return math.ceil(6.0 / (sigma * sigma * epsilon) - 1e-9)


def _cell_seed(seed: int, members: np.ndarray, tag: int) -> list[int]:
    return [seed, tag, zlib.crc32(members.tobytes())]


def _cell_profile(cell_points: WeightedPointSet, shape: ShapeSpec, b: int, r: float,
                  seed) -> tuple[list[float], list[list[Placement]]]:
    """``F[k]`` on the thinned cell set for ``k = 0..b`` with witnesses.

    Only the cell's own points count (the effective region). If the thinned set
    is still above the critical cap, candidates come from a weighted sample of
    cap size and are scored on the whole thinned set.
    """
    A = thin(cell_points, r, b, seed).points
    src = A
    if len(A) > CRITICAL_CAP:
        src = _weighted_sample(A, CRITICAL_CAP, seed)
    crit = enumerate_critical(src, shape)
    F = [0.0]
    witnesses: list[list[Placement]] = [[]]
    if not crit:
        anchor = Placement(float(cell_points.xs[0]), float(cell_points.ys[0])) if len(cell_points) \
            else Placement(0.0, 0.0)
        return [0.0] * (b + 1), [[]] + [[anchor] * k for k in range(1, b + 1)]
    cx = np.array([c.placement.x for c in crit])
    cy = np.array([c.placement.y for c in crit])
    inside = contains_matrix(shape, cx, cy, A.xs, A.ys)
    ws = A.ws
    prev: list[int] = []
    for k in range(1, b + 1):
        res = _best_subset(inside, ws, k, EXHAUSTIVE_BUDGET) if k <= MAX_EXACT_M else None
        picks = res[1] if res is not None else _greedy_subset(inside, ws, k, prev[:k - 1])
        while len(picks) < k:
            picks = picks + [picks[0]]
        val = math.fsum(ws[np.logical_or.reduce(inside[picks], axis=0)].tolist())
        if val < F[-1]:
            val, picks = F[-1], prev + [prev[0]]
        F.append(val)
        witnesses.append([crit[c].placement for c in picks])
        prev = list(picks)
    return F, witnesses


def _solve_shift(points: WeightedPointSet, shape: ShapeSpec, epsilon: float, m: int, s: int,
                 shift: int, seed: int, cache: dict) -> tuple[float, list[Placement]]:
    sigma = shape.sigma
    grid = GridSpec(float(s), float(shift), float(shift))
    keys, order, starts = group_by_cell(points.xs, points.ys, grid)
    ncell = len(keys)
    r_sel = thinning_radius(epsilon ** 2 / 9, sigma)
    r_prof = thinning_radius(epsilon / 3, sigma)
    b = max(1, min(m, int(s * s / (sigma * sigma))))

    def profile(c: int, bb: int, r: float, tag: int):
        members = order[starts[c]:starts[c + 1]]
        key = (members.tobytes(), bb, tag)
        hit = cache.get(key)
        if hit is None:
            hit = _cell_profile(points.subset(members), shape, bb, r, _cell_seed(seed, members, tag))
            cache[key] = hit
        return hit

    values = [profile(c, 1, r_sel, 0)[0][1] for c in range(ncell)]
    top = allocator.select_top_m_cells(values, m)
    tables = []
    for c in top:
        F, wit = profile(c, b, r_prof, 1)
        tables.append(ProfileTable(tuple(int(v) for v in keys[c]), F, wit))
    alloc = allocator.allocate(tables, m, epsilon, regime_scale=1.0 / sigma ** 6)
    out: list[Placement] = []
    for t, k in zip(tables, alloc.counts):
        if k:
            out.extend(t.placements[k])
    if not out:
        out = [Placement(float(points.xs[0]), float(points.ys[0]))]
    while len(out) < m:
        out.append(out[0])
    out = out[:m]
    cx = [p.x for p in out]
    cy = [p.y for p in out]
    w = math.fsum(points.ws[contains_matrix(shape, cx, cy, points.xs, points.ys).any(axis=0)].tolist())
    return w, out


def solve_general(points: WeightedPointSet, shape: ShapeSpec, epsilon: float, m: int,
                  seed: int = 0, threads: int = 1) -> PlacementSet:
    """``m`` copies of a disk or convex polygon via shifted grids with effective regions.

    The shape is first scaled so its bounding box is 1x1; placements are
    mapped back and their true coverage recomputed on the input points.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    meta = f"approx({epsilon})"
    if len(points) == 0:
        return PlacementSet(tuple(Placement(0.0, 0.0) for _ in range(m)), 0.0, meta)
    sx, sy = shape.normalizer()
    unit = shape.normalized()
    norm = points.scaled(1.0 / sx, 1.0 / sy)
    s = grid_side(epsilon, unit.sigma)
    cache: dict = {}

    def run(shift: int):
        return _solve_shift(norm, unit, epsilon, m, s, shift, seed, cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(s)))
    else:
        results = [run(i) for i in range(s)]
    best_w, best_p = -1.0, None
    for w, placements in results:
        if w > best_w:
            best_w, best_p = w, placements
    back = [Placement(p.x * sx, p.y * sy) for p in best_p]
    return make_placement_set(points, shape, back, meta)
