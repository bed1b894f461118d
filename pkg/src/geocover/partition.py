"""Cut lines inside one cell with bounded weight between adjacent lines."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, WeightedPointSet
from .selection import WeightedValue, weighted_median


@dataclass(frozen=True)
class CutLines:
    """Sorted vertical (``xs``) and horizontal (``ys``) line coordinates.

    Both lists start and end with the cell boundaries. ``depth_x`` and
    ``depth_y`` record the recursion depth reached by the median splitting.
    """
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    depth_x: int = 0
    depth_y: int = 0

    @property
    def interior_x(self) -> int:
        return len(self.xs) - 2

    @property
    def interior_y(self) -> int:
        return len(self.ys) - 2


def _median_split(values: np.ndarray, weights: np.ndarray, w_d: float) -> tuple[set[float], int]:
    """Recursive weighted-median splitting of light points; returns (lines, depth)."""
    lines: set[float] = set()
    depth = 0
    stack = [(np.arange(len(values)), 1)]
    while stack:
        idx, level = stack.pop()
        depth = max(depth, level)
        items = [WeightedValue(float(values[i]), float(weights[i]), int(i)) for i in idx]
        med = weighted_median(items).value
        lines.add(med)
        v = values[idx]
        for side in (idx[v < med], idx[v > med]):
            if len(side) and math.fsum(weights[side].tolist()) > w_d:
                stack.append((side, level + 1))
    return lines, depth


def _axis_lines(values: np.ndarray, weights: np.ndarray, lo: float, hi: float,
                w_d: float) -> tuple[tuple[float, ...], int]:
    heavy = weights >= w_d
    lines = set(values[heavy].tolist())
    depth = 0
    light_v, light_w = values[~heavy], weights[~heavy]
    if len(light_v) and math.fsum(light_w.tolist()) > w_d:
        extra, depth = _median_split(light_v, light_w, w_d)
        lines |= extra
    lines.add(lo)
    lines.add(hi)
    return tuple(sorted(lines)), depth


def build_cut_lines(cell_points: WeightedPointSet, cell_bounds, w_d: float) -> CutLines:
    """Lines so that the weight strictly between adjacent parallel lines is at most ``w_d``.

    Points of weight ``>= w_d`` get a line through them; the remaining points
    are split recursively at the weighted median while a side weighs more than
    ``w_d``. Points on a line are not between lines.
    """
    if not w_d > 0:
        raise DomainError(f"w_d must be positive, got {w_d}")
    x0, x1, y0, y1 = cell_bounds
    xs, dx = _axis_lines(cell_points.xs, cell_points.ws, x0, x1, w_d)
    ys, dy = _axis_lines(cell_points.ys, cell_points.ws, y0, y1, w_d)
    return CutLines(xs, ys, dx, dy)


def max_strip_weight(lines: tuple[float, ...], values: np.ndarray, weights: np.ndarray) -> float:
    """Largest weight strictly between two adjacent lines (direct scan)."""
    best = 0.0
    for lo, hi in zip(lines[:-1], lines[1:]):
        sel = (values > lo) & (values < hi)
        best = max(best, math.fsum(weights[sel].tolist()))
    return best
