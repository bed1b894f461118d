"""Distribute the square budget across cells from their profiles."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .cell_solver import ProfileTable
from .core import DomainError
from .selection import top_k

# Greedy is used instead of the DP once m exceeds this many (1/eps)^4.
GREEDY_REGIME_FACTOR = 324


@dataclass(frozen=True)
class Allocation:
    """Per-cell square counts and the profile objective they achieve.

    ``padding`` squares are extra duplicates (added to the first cell's
    placements) that the objective does not count; ``saturated`` is set when
    the budget exceeds what the profiles can absorb.
    """
    counts: tuple[int, ...]
    objective: float
    padding: int = 0
    saturated: bool = False


def select_top_m_cells(values: Sequence[float], m: int) -> list[int]:
    """Indices of the ``min(m, t)`` cells with the largest single-square value (ties: lower index)."""
    return top_k(values, m)


def _check(profiles: Sequence[ProfileTable], m: int) -> None:
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    for p in profiles:
        if not p.F or p.F[0] != 0:
            raise DomainError("profile must start with F[0] = 0")


def allocate_dp(profiles: Sequence[ProfileTable], m: int) -> Allocation:
    """Exact maximum of ``sum F_i(k_i)`` subject to ``sum k_i = m``, ``k_i <= b_i``."""
    _check(profiles, m)
    cap = sum(p.b for p in profiles)
    if m >= cap:
        counts = tuple(p.b for p in profiles)
        return Allocation(counts, sum(p.F[-1] for p in profiles), padding=m - cap,
                          saturated=m > cap)
    # A[k] = best objective over processed cells using exactly k squares
    NEG = float("-inf")
    A = [0.0] + [NEG] * m
    choice: list[list[int]] = []
    for p in profiles:
        new = [NEG] * (m + 1)
        arg = [0] * (m + 1)
        for k in range(m + 1):
            best, bj = NEG, 0
            for j in range(min(k, p.b) + 1):
                prev = A[k - j]
                if prev == NEG:
                    continue
                val = prev + p.F[j]
                if val > best:
                    best, bj = val, j
            new[k], arg[k] = best, bj
        A = new
        choice.append(arg)
    counts = [0] * len(profiles)
    k = m
    for i in range(len(profiles) - 1, -1, -1):
        counts[i] = choice[i][k]
        k -= counts[i]
    objective = sum(p.F[c] for p, c in zip(profiles, counts))
    return Allocation(tuple(counts), objective)


def _breakpoints(p: ProfileTable) -> list[tuple[int, float]]:
    """Hull vertices plus every ``k`` whose ``F[k]`` lies exactly on a hull edge."""
    out = [p.hull[0]]
    for (k0, f0), (k1, f1) in zip(p.hull, p.hull[1:]):
        for k in range(k0 + 1, k1):
            if (k1 - k0) * (p.F[k] - f0) == (f1 - f0) * (k - k0):
                out.append((k, p.F[k]))
        out.append((k1, f1))
    return out


def allocate_greedy(profiles: Sequence[ProfileTable], m: int) -> Allocation:
    """Take whole upper-hull edges in order of decreasing slope.

    Hull edges are split at profile points lying exactly on them, so
    collinear stretches can be taken one square at a time. Edges are consumed from a max-heap (ties: lower cell index) while the next
    edge still fits the budget. Stopping at the first edge that does not fit
    keeps the taken edges a prefix of the slope order, so the objective is
    optimal for the number of squares placed, which is at least ``m - b``.
    The rest of the budget becomes padding.
    """
    _check(profiles, m)
    pos = [0] * len(profiles)
    steps = [_breakpoints(p) for p in profiles]
    heap: list[tuple[float, int]] = []

    def push(i: int) -> None:
        hull = steps[i]
        if pos[i] + 1 < len(hull):
            (k0, f0), (k1, f1) = hull[pos[i]], hull[pos[i] + 1]
            heapq.heappush(heap, (-(f1 - f0) / (k1 - k0), i))

    for i in range(len(profiles)):
        push(i)
    placed = 0
    while heap:
        _, i = heap[0]
        hull = steps[i]
        step = hull[pos[i] + 1][0] - hull[pos[i]][0]
        if placed + step > m:
            break
        heapq.heappop(heap)
        pos[i] += 1
        placed += step
        push(i)
    counts = tuple(steps[i][pos[i]][0] for i in range(len(profiles)))
    objective = sum(p.F[c] for p, c in zip(profiles, counts))
    return Allocation(counts, objective, padding=m - placed, saturated=not heap and placed < m)


def allocate(profiles: Sequence[ProfileTable], m: int, epsilon: float,
             regime_scale: float = 1.0) -> Allocation:
    """DP when ``m <= 324 (1/eps)^4 * regime_scale``, greedy otherwise."""
    if m <= GREEDY_REGIME_FACTOR * regime_scale / epsilon ** 4:
        return allocate_dp(profiles, m)
    return allocate_greedy(profiles, m)
