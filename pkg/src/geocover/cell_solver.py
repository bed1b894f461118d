"""Per-cell solvers on a cut-line grid: one square in a 2x2 cell, k squares in a big cell.

Squares are only placed with their top-left corner on a grid point
``(xs[i], ys[j])``. Their approximate weight counts the points lying on the
closed line span the square fully contains: columns ``xs[i]..xs[R]`` where
``xs[R]`` is the last line with ``xs[R] <= xs[i] + 1``, rows ``ys[B]..ys[j]``
where ``ys[B]`` is the first line with ``ys[B] >= ys[j] - 1``. Everything
counted is inside the square, and what is missed lies strictly between two
adjacent lines on each axis.

Weights live in an interleaved matrix: even index ``2t`` is the line ``t``,
odd index ``2t + 1`` is the open strip between lines ``t`` and ``t + 1``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (DomainError, Placement, PlacementSet, ShapeSpec, WeightedPointSet,
                   make_placement_set)
from .exact_rect import solve_exact_1
from .partition import CutLines, build_cut_lines

_UNIT = ShapeSpec.square()

# Threshold constants of the two partition schemes.
M1_STRIP_DIVISOR = 16      # w_d = eps * W_c / 16 for one square in a 2x2 cell
MULTI_STRIP_DIVISOR = 432  # w_d = eps^3 * W_c / 432 for k squares in a 6/eps cell

EXHAUSTIVE_BUDGET = 200_000     # max combinations for the exhaustive engine
MASK_BUDGET = 4_000_000         # max candidate x entry products when building bitmasks
MAX_MASK_CANDIDATES = 2_500     # max grid points for the bitmask engines
DP_MAX_K = 4
DP_MAX_CANDIDATES = 64


@dataclass(frozen=True)
class SubcellMatrix:
    cut: CutLines
    w: np.ndarray        # interleaved (2u-1) x (2v-1) weights, [x index, y index]
    prefix: np.ndarray   # (2u) x (2v) zero-padded 2-D prefix sums of ``w``
    total: float

    @property
    def shape_lines(self) -> tuple[int, int]:
        return len(self.cut.xs), len(self.cut.ys)

    def block_sum(self, c0: int, c1: int, r0: int, r1: int) -> float:
        """Sum of ``w[c0..c1, r0..r1]`` (inclusive); empty ranges give 0."""
        if c1 < c0 or r1 < r0:
            return 0.0
        P = self.prefix
        return float(P[c1 + 1, r1 + 1] - P[c0, r1 + 1] - P[c1 + 1, r0] + P[c0, r0])

    def subcell_weights(self) -> np.ndarray:
        """Conventional ``(u-1) x (v-1)`` subcell matrix.

        A point on line ``t`` goes to the subcell on its right (above); points
        on the last line go to the last subcell.
        """
        u, v = self.shape_lines
        cu, cv = max(u - 1, 1), max(v - 1, 1)
        col = np.minimum(np.arange(2 * u - 1) // 2, cu - 1)
        row = np.minimum(np.arange(2 * v - 1) // 2, cv - 1)
        out = np.zeros((cu, cv))
        np.add.at(out, (col[:, None].repeat(len(row), 1), row[None, :].repeat(len(col), 0)), self.w)
        return out

    def candidate_spans(self) -> tuple[np.ndarray, np.ndarray]:
        """Per column line ``i`` the last covered line ``R[i]``; per row line ``j`` the first ``B[j]``."""
        xs = np.asarray(self.cut.xs)
        ys = np.asarray(self.cut.ys)
        R = np.searchsorted(xs, xs + 1.0, side="right") - 1
        B = np.searchsorted(ys, ys - 1.0, side="left")
        return R, B

    def all_single_weights(self) -> np.ndarray:
        """Approximate weight of the square at every grid point, shape ``(u, v)``."""
        R, B = self.candidate_spans()
        u, v = self.shape_lines
        P = self.prefix
        c0 = 2 * np.arange(u)
        c1 = 2 * R + 1
        r0 = 2 * B
        r1 = 2 * np.arange(v) + 1
        return (P[c1[:, None], r1[None, :]] - P[c0[:, None], r1[None, :]]
                - P[c1[:, None], r0[None, :]] + P[c0[:, None], r0[None, :]])


def _interleaved_index(lines: np.ndarray, values: np.ndarray) -> np.ndarray:
    t = np.searchsorted(lines, values, side="right") - 1
    t = np.clip(t, 0, len(lines) - 1)
    on_line = lines[t] == values
    idx = np.where(on_line, 2 * t, 2 * t + 1)
    return np.minimum(idx, 2 * len(lines) - 2)


def matrix_from_lines(cell_points: WeightedPointSet, cut: CutLines) -> SubcellMatrix:
    xs = np.asarray(cut.xs)
    ys = np.asarray(cut.ys)
    w = np.zeros((2 * len(xs) - 1, 2 * len(ys) - 1))
    if len(cell_points):
        ci = _interleaved_index(xs, cell_points.xs)
        cj = _interleaved_index(ys, cell_points.ys)
        np.add.at(w, (ci, cj), cell_points.ws)
    prefix = np.zeros((w.shape[0] + 1, w.shape[1] + 1))
    prefix[1:, 1:] = w.cumsum(0).cumsum(1)
    return SubcellMatrix(cut, w, prefix, cell_points.total_weight)


def build_fine_grid(cell_points: WeightedPointSet, cell_bounds, threshold: float) -> SubcellMatrix:
    """Cut lines with strip weight at most ``threshold`` plus the weight matrix."""
    return matrix_from_lines(cell_points, build_cut_lines(cell_points, cell_bounds, threshold))


def _check_eps(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def max_cov_cell(cell_points: WeightedPointSet, cell_bounds, epsilon: float) -> PlacementSet:
    """One square for a 2x2 cell, within ``1 - epsilon`` of the best for the cell's points."""
    _check_eps(epsilon)
    n = len(cell_points)
    if n < (1.0 / epsilon) ** 2 or cell_points.total_weight == 0:
        return solve_exact_1(cell_points)
    w_d = epsilon * cell_points.total_weight / M1_STRIP_DIVISOR
    mat = build_fine_grid(cell_points, cell_bounds, w_d)
    weights = mat.all_single_weights()
    i, j = np.unravel_index(int(np.argmax(weights)), weights.shape)
    p = Placement(mat.cut.xs[i], mat.cut.ys[j])
    return make_placement_set(cell_points, _UNIT, [p], f"approx({epsilon})")


# k squares on the grid ------------------------------------------------------


class _Candidates:
    """Bitmask view of grid candidates over the nonzero matrix entries."""

    def __init__(self, matrix: SubcellMatrix):
        self.matrix = matrix
        u, v = matrix.shape_lines
        R, B = matrix.candidate_spans()
        zc, zr = np.nonzero(matrix.w)
        self.zc, self.zr = zc, zr
        self.zw = matrix.w[zc, zr].tolist()
        inx = (2 * np.arange(u)[:, None] <= zc[None, :]) & (zc[None, :] <= 2 * R[:, None])
        iny = (2 * B[:, None] <= zr[None, :]) & (zr[None, :] <= 2 * np.arange(v)[:, None])
        inside = (inx[:, None, :] & iny[None, :, :]).reshape(u * v, len(zc))
        if len(zc):
            packed = np.packbits(inside, axis=1, bitorder="little")
            masks = [int.from_bytes(r.tobytes(), "little") for r in packed]
        else:
            masks = [0] * (u * v)
        # keep the first (lexicographically smallest) grid point per distinct mask, then
        # drop masks strictly contained in another
        first: dict[int, int] = {}
        for idx, mk in enumerate(masks):
            if mk:
                first.setdefault(mk, idx)
        kept: list[tuple[int, int]] = []
        for mk, idx in sorted(first.items(), key=lambda kv: (-kv[0].bit_count(), kv[1])):
            if not any((mk | o) == o for o, _ in kept):
                kept.append((mk, idx))
        kept.sort(key=lambda t: t[1])
        self.masks = [mk for mk, _ in kept]
        self.grid_index = [idx for _, idx in kept]
        self.rows = inside[self.grid_index] if kept else np.zeros((0, len(zc)), dtype=bool)
        self.v = v
        self.R, self.B = R, B
        # block extents in matrix coordinates
        self.blocks = []
        for idx in self.grid_index:
            i, j = divmod(idx, v)
            self.blocks.append((2 * i, 2 * int(R[i]), 2 * int(B[j]), 2 * j))

    def weight(self, mask: int) -> float:
        total = 0.0
        zw = self.zw
        i = 0
        while mask:
            low = mask & -mask
            i = low.bit_length() - 1
            total += zw[i]
            mask ^= low
        return total

    def placement(self, c: int) -> Placement:
        i, j = divmod(self.grid_index[c], self.v)
        cut = self.matrix.cut
        return Placement(cut.xs[i], cut.ys[j])


def _exhaustive(cands: _Candidates, k: int) -> tuple[float, list[int]]:
    """Lexicographically first best ``k``-combination; the last two picks are vectorized."""
    n = len(cands.masks)
    if n == 0:
        return 0.0, []
    size = min(k, n)
    rows, zw = cands.rows, np.asarray(cands.zw)
    if size == 1:
        vals = rows.astype(np.float64) @ zw
        c = int(np.argmax(vals))
        return float(vals[c]), [c]
    best, arg = -1.0, ()
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    for head in itertools.combinations(range(n - 2), size - 2):
        lo = head[-1] + 1 if head else 0
        base = np.logical_or.reduce(rows[list(head)], axis=0) if head else np.zeros(rows.shape[1], bool)
        fresh = (rows[lo:] & ~base).astype(np.float64)
        gain = fresh @ zw
        # union of picks i < j on top of the head: gain_i + gain_j - shared_ij
        vals = gain[:, None] + gain[None, :] - (fresh * zw) @ fresh.T + float(base @ zw)
        vals = np.where(upper[lo:, lo:], vals, -np.inf)
        c = int(np.argmax(vals))
        if vals.flat[c] > best + 1e-9 * max(1.0, abs(best)):
            i, j = divmod(c, n - lo)
            best, arg = float(vals.flat[c]), head + (lo + i, lo + j)
    u = 0
    for c in arg:
        u |= cands.masks[c]
    return cands.weight(u), list(arg)


def _parting_line_dp(cands: _Candidates, k: int) -> tuple[float, list[int]]:
    """Divide and conquer over parting lines of the matrix.

    A subproblem is a sub-rectangle of the matrix, a budget, and the entries of
    the rectangle already covered by squares that cross its boundary (fixed by
    an ancestor's parting line). Each step picks a vertical or horizontal line,
    enumerates the set of squares crossing it (at most ``cap`` of them) and the
    split of the remaining budget, and solves both sides.
    """
    masks = cands.masks
    blocks = cands.blocks
    zc, zr = cands.zc, cands.zr
    nz = len(zc)
    cap = min(k, max(1, math.ceil(2 * math.sqrt(k))))
    rect_mask_cache: dict[tuple[int, int, int, int], int] = {}

    def rect_mask(c0, c1, r0, r1) -> int:
        key = (c0, c1, r0, r1)
        mk = rect_mask_cache.get(key)
        if mk is None:
            mk = 0
            for z in range(nz):
                if c0 <= zc[z] <= c1 and r0 <= zr[z] <= r1:
                    mk |= 1 << z
            rect_mask_cache[key] = mk
        return mk

    @lru_cache(maxsize=None)
    def solve(c0, c1, r0, r1, budget, base) -> tuple[float, tuple[int, ...]]:
        rm = rect_mask(c0, c1, r0, r1)
        inside = [c for c, (a, b, lo, hi) in enumerate(blocks)
                  if c0 <= a and b <= c1 and r0 <= lo and hi <= r1 and (masks[c] & rm & ~base)]
        if budget == 0 or not inside:
            return cands.weight(base), ()
        if all(blocks[c] == (c0, c1, r0, r1) for c in inside):
            return cands.weight(base | (masks[inside[0]] & rm)), (inside[0],)
        splits = []
        for c in inside:
            a, b, lo, hi = blocks[c]
            if a > c0:
                splits.append((0, a))
            if b < c1:
                splits.append((0, b + 1))
            if lo > r0:
                splits.append((1, lo))
            if hi < r1:
                splits.append((1, hi + 1))
        splits = sorted(set(splits))

        def crossing(axis, t):
            if axis == 0:
                return [c for c in inside if blocks[c][0] < t <= blocks[c][1]]
            return [c for c in inside if blocks[c][2] < t <= blocks[c][3]]

        if cap >= budget:
            # any single line decomposes every configuration; take the one crossed least
            splits = [min(splits, key=lambda s: (len(crossing(*s)), s))]
        best = (-1.0, ())
        for axis, t in splits:
            if axis == 0:
                left, right = (c0, t - 1, r0, r1), (t, c1, r0, r1)
            else:
                left, right = (c0, c1, r0, t - 1), (c0, c1, t, r1)
            lm, rmk = rect_mask(*left), rect_mask(*right)
            cross = crossing(axis, t)
            for s in range(0, min(cap, budget, len(cross)) + 1):
                for S in itertools.combinations(cross, s):
                    cov = base
                    for c in S:
                        cov |= masks[c]
                    rest = budget - s
                    for kl in range(rest + 1):
                        vl, sl = solve(*left, kl, cov & lm)
                        vr, sr = solve(*right, rest - kl, cov & rmk)
                        val = vl + vr
                        if val > best[0]:
                            best = (val, tuple(S) + sl + sr)
        return best

    if not masks:
        return 0.0, []
    u2 = cands.matrix.w.shape
    full = (0, u2[0] - 1, 0, u2[1] - 1)
    target, _ = solve(*full, k, 0)
    # canonical witness: the lexicographically first combination of min(k, n)
    # distinct candidates reaching the optimum, fixed one index at a time
    n = len(masks)
    size = min(k, n)
    tol = 1e-9 * max(1.0, abs(target))
    chosen: list[int] = []
    cov = 0
    for t in range(size):
        for c in range(chosen[-1] + 1 if chosen else 0, n - (size - t) + 1):
            val, _ = solve(*full, size - t - 1, cov | masks[c])
            if val >= target - tol:
                chosen.append(c)
                cov |= masks[c]
                break
    return cands.weight(cov), chosen


def _greedy_prefix(matrix: SubcellMatrix, kmax: int) -> list[tuple[float, list[Placement]]]:
    """Greedy max-marginal-gain placements; entry ``k-1`` is the first ``k`` picks."""
    R, B = matrix.candidate_spans()
    u, v = matrix.shape_lines
    cut = matrix.cut
    remaining = matrix.w.copy()
    out = []
    picks: list[Placement] = []
    c0 = 2 * np.arange(u)
    c1 = 2 * R + 1
    r0 = 2 * B
    r1 = 2 * np.arange(v) + 1
    for _ in range(kmax):
        P = np.zeros((remaining.shape[0] + 1, remaining.shape[1] + 1))
        P[1:, 1:] = remaining.cumsum(0).cumsum(1)
        gains = (P[c1[:, None], r1[None, :]] - P[c0[:, None], r1[None, :]]
                 - P[c1[:, None], r0[None, :]] + P[c0[:, None], r0[None, :]])
        i, j = np.unravel_index(int(np.argmax(gains)), gains.shape)
        picks.append(Placement(cut.xs[i], cut.ys[j]))
        remaining[2 * i:2 * int(R[i]) + 1, 2 * int(B[j]):2 * j + 1] = 0.0
        out.append((approx_union_weight(matrix, picks), list(picks)))
    return out


def approx_union_weight(matrix: SubcellMatrix, placements) -> float:
    """Weight of matrix entries inside the union of the counted blocks of ``placements``."""
    xs = np.asarray(matrix.cut.xs)
    ys = np.asarray(matrix.cut.ys)
    R, B = matrix.candidate_spans()
    covered = np.zeros(matrix.w.shape, dtype=bool)
    for p in placements:
        i = int(np.searchsorted(xs, p.x))
        j = int(np.searchsorted(ys, p.y))
        if i >= len(xs) or xs[i] != p.x or j >= len(ys) or ys[j] != p.y:
            raise DomainError(f"placement {p} is not a grid point")
        covered[2 * i:2 * int(R[i]) + 1, 2 * int(B[j]):2 * j + 1] = True
    zc, zr = np.nonzero(matrix.w)
    sel = covered[zc, zr]
    total = 0.0
    for val in matrix.w[zc[sel], zr[sel]].tolist():
        total += val
    return total


def _pad(placements: list[Placement], k: int, matrix: SubcellMatrix) -> list[Placement]:
    placements = list(placements)
    if not placements:
        placements = [Placement(matrix.cut.xs[0], matrix.cut.ys[-1])]
    while len(placements) < k:
        placements.append(placements[0])
    return placements


def place_k_squares_on_grid(matrix: SubcellMatrix, k: int, engine: str = "auto",
                            b: int | None = None) -> tuple[float, list[Placement]]:
    """Best ``k`` grid-point squares by approximate (fully covered span) weight.

    ``engine`` is ``"exhaustive"``, ``"dp"`` (parting-line divide and
    conquer), ``"greedy"``, or ``"auto"``, which uses the exhaustive engine
    within its combination budget, then the parting-line engine, and falls
    back to greedy marginal gains only when both exact engines are out of
    budget. ``b``, when given, is the per-cell square budget ``k`` may not exceed.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if b is not None and k > b:
        raise DomainError(f"k = {k} exceeds the cell budget b = {b}")
    if k == 1 and engine in ("auto", "scan"):
        weights = matrix.all_single_weights()
        i, j = np.unravel_index(int(np.argmax(weights)), weights.shape)
        p = Placement(matrix.cut.xs[i], matrix.cut.ys[j])
        return approx_union_weight(matrix, [p]), [p]
    if engine == "greedy":
        val, picks = _greedy_prefix(matrix, k)[-1]
        return val, picks
    if not _masks_affordable(matrix):
        if engine != "auto":
            raise DomainError("grid too large for the exact engines")
        val, picks = _greedy_prefix(matrix, k)[-1]
        return val, picks
    cands = _Candidates(matrix)
    return _solve_on_candidates(cands, matrix, k, engine)


def _masks_affordable(matrix: SubcellMatrix) -> bool:
    u, v = matrix.shape_lines
    nz = int(np.count_nonzero(matrix.w))
    return u * v <= MAX_MASK_CANDIDATES and u * v * max(nz, 1) <= MASK_BUDGET


def _choose_engine(n: int, k: int) -> str:
    if math.comb(n, min(k, n)) <= EXHAUSTIVE_BUDGET:
        return "exhaustive"
    if k <= DP_MAX_K and n <= DP_MAX_CANDIDATES:
        return "dp"
    return "greedy"


def _solve_on_candidates(cands: _Candidates, matrix: SubcellMatrix, k: int, engine: str
                         ) -> tuple[float, list[Placement]]:
    if engine == "auto":
        engine = _choose_engine(len(cands.masks), k)
    if engine == "exhaustive":
        _, chosen = _exhaustive(cands, k)
    elif engine == "dp":
        _, chosen = _parting_line_dp(cands, k)
    elif engine == "greedy":
        val, picks = _greedy_prefix(matrix, k)[-1]
        return val, picks
    else:
        raise DomainError(f"unknown engine {engine!r}")
    picks = _pad([cands.placement(c) for c in chosen], k, matrix)
    return approx_union_weight(matrix, picks), picks


# profiles ---------------------------------------------------------------------


def upper_hull(F: list[float]) -> list[tuple[int, float]]:
    """Upper concave hull of ``(k, F[k])`` with strictly decreasing edge slopes."""
    hull: list[tuple[int, float]] = []
    for k, f in enumerate(F):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle vertex unless it lies strictly above the chord
            if (x2 - x1) * (f - y1) - (y2 - y1) * (k - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((k, f))
    return hull


@dataclass
class ProfileTable:
    """``F[k]`` for ``k = 0..b`` for one cell, its witnesses and the upper hull."""
    cell: tuple
    F: list[float]
    placements: list[list[Placement]] = field(default_factory=list)
    hull: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.hull:
            self.hull = upper_hull(self.F)

    @property
    def b(self) -> int:
        return len(self.F) - 1


def max_cov_cell_m(cell_points: WeightedPointSet, cell_bounds, epsilon: float, b: int,
                   cell=None) -> ProfileTable:
    """Profile ``F[k]`` for ``k = 1..b`` for one large cell, from one fine partition.

    Strips between adjacent lines weigh at most ``eps^3 W_c / 432``.
    """
    _check_eps(epsilon)
    if b < 1:
        raise DomainError(f"b must be >= 1, got {b}")
    cell = cell if cell is not None else tuple(cell_bounds)
    x0, x1, y0, y1 = cell_bounds
    if len(cell_points) == 0 or cell_points.total_weight == 0:
        empty = [Placement(x0, y1)]
        return ProfileTable(cell, [0.0] * (b + 1), [[]] + [empty * k for k in range(1, b + 1)])
    threshold = epsilon ** 3 * cell_points.total_weight / MULTI_STRIP_DIVISOR
    matrix = build_fine_grid(cell_points, cell_bounds, threshold)
    return profile_from_matrix(matrix, b, cell)


def profile_from_matrix(matrix: SubcellMatrix, b: int, cell) -> ProfileTable:
    cands = _Candidates(matrix) if _masks_affordable(matrix) else None
    F = [0.0]
    placements: list[list[Placement]] = [[]]
    greedy: list | None = None
    for k in range(1, b + 1):
        engine = _choose_engine(len(cands.masks), k) if cands is not None else "greedy"
        if engine == "greedy":
            if greedy is None:
                greedy = _greedy_prefix(matrix, b)
            val, picks = greedy[k - 1]
        elif k == 1:
            val, picks = place_k_squares_on_grid(matrix, 1)
        else:
            val, picks = _solve_on_candidates(cands, matrix, k, engine)
        if val < F[-1]:
            # keep F nondecreasing: reuse the previous witness plus a duplicate
            val, picks = F[-1], placements[-1] + [placements[-1][0]]
        F.append(val)
        placements.append(list(picks))
    return ProfileTable(cell, F, placements)
