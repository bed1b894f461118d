"""Domain types, coverage evaluation, grid bucketing and instance I/O."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

# Boundary slack for curved / polygonal containment. Squares use exact comparisons.
CONTAIN_TOL = 1e-9


class GeoCoverError(Exception):
    pass


class DomainError(GeoCoverError, ValueError):
    pass


class CapExceededError(DomainError):
    pass


class ParseError(GeoCoverError, ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class WeightedPoint:
    x: float
    y: float
    w: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite coordinate ({self.x}, {self.y})")
        if not math.isfinite(self.w) or self.w < 0:
            raise DomainError(f"weight must be finite and >= 0, got {self.w}")


class WeightedPointSet:
    """Immutable weighted point set backed by three read-only float64 arrays.

    Input order is preserved; ``total_weight`` is computed once with ``math.fsum``.
    """

    __slots__ = ("xs", "ys", "ws", "total_weight")

    def __init__(self, xs, ys, ws, *, validate: bool = True):
        xs = np.array(xs, dtype=np.float64).reshape(-1)
        ys = np.array(ys, dtype=np.float64).reshape(-1)
        ws = np.array(ws, dtype=np.float64).reshape(-1)
        if not (len(xs) == len(ys) == len(ws)):
            raise DomainError("coordinate and weight arrays differ in length")
        if validate and len(xs):
            if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
                raise DomainError("non-finite coordinate")
            if not np.isfinite(ws).all() or (ws < 0).any():
                raise DomainError("weights must be finite and >= 0")
        for a in (xs, ys, ws):
            a.flags.writeable = False
        self.xs = xs
        self.ys = ys
        self.ws = ws
        self.total_weight = math.fsum(ws.tolist())

    @classmethod
    def from_points(cls, points: Iterable[WeightedPoint | Sequence[float]]) -> "WeightedPointSet":
        rows = [(p.x, p.y, p.w) if isinstance(p, WeightedPoint) else tuple(p) for p in points]
        if not rows:
            return cls.empty()
        arr = np.asarray(rows, dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def empty(cls) -> "WeightedPointSet":
        return cls(np.empty(0), np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def points(self) -> list[WeightedPoint]:
        return [WeightedPoint(float(x), float(y), float(w))
                for x, y, w in zip(self.xs, self.ys, self.ws)]

    def subset(self, idx) -> "WeightedPointSet":
        idx = np.asarray(idx, dtype=np.intp)
        return WeightedPointSet(self.xs[idx], self.ys[idx], self.ws[idx], validate=False)

    def translated(self, dx: float, dy: float) -> "WeightedPointSet":
        return WeightedPointSet(self.xs + dx, self.ys + dy, self.ws, validate=False)

    def scaled(self, sx: float, sy: float) -> "WeightedPointSet":
        return WeightedPointSet(self.xs * sx, self.ys * sy, self.ws, validate=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedPointSet):
            return NotImplemented
        return (np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)
                and np.array_equal(self.ws, other.ws))

    def __repr__(self) -> str:
        return f"WeightedPointSet(n={len(self)}, total_weight={self.total_weight!r})"


@dataclass(frozen=True)
class Placement:
    """Reference point of a placed copy.

    Squares/rectangles: top-left corner. Disks: center. Polygons: the pivot
    (first listed vertex).
    """
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite placement ({self.x}, {self.y})")

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True)
class PlacementSet:
    placements: tuple[Placement, ...]
    covered_weight: float
    meta: str = "exact"

    def __len__(self) -> int:
        return len(self.placements)


def _polygon_area2(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class ShapeSpec:
    """The object being placed.

    ``kind`` is one of ``"rectangle"``, ``"disk"``, ``"polygon"``. For polygons
    ``vertices`` are stored relative to the pivot (the first input vertex),
    counterclockwise. ``sigma`` is the side of the largest axis-parallel square
    inside the shape after bounding-box normalization, rounded down so that
    ``1/sigma`` is an integer (squares and rectangles have sigma 1).
    """
    kind: str
    a: float = 1.0
    b: float = 1.0
    radius: float = 0.0
    vertices: tuple[tuple[float, float], ...] = ()
    sigma: float = 1.0

    @classmethod
    def square(cls) -> "ShapeSpec":
        return cls("rectangle", 1.0, 1.0)

    @classmethod
    def rectangle(cls, a: float, b: float) -> "ShapeSpec":
        if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"rectangle sides must be positive, got {a}x{b}")
        return cls("rectangle", float(a), float(b))

    @classmethod
    def disk(cls, radius: float) -> "ShapeSpec":
        if not (radius > 0 and math.isfinite(radius)):
            raise DomainError(f"disk radius must be positive, got {radius}")
        # inscribed square of the normalized disk (radius 1/2) has side sqrt(2)/2
        return cls("disk", radius=float(radius), sigma=_integral_sigma(math.sqrt(0.5)))

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "ShapeSpec":
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("polygon needs at least 3 vertices")
        if not np.isfinite(v).all():
            raise DomainError("non-finite polygon vertex")
        if _polygon_area2(v) <= 0:
            raise DomainError("polygon vertices must be listed counterclockwise")
        n = len(v)
        for i in range(n):
            p, q, r = v[i], v[(i + 1) % n], v[(i + 2) % n]
            cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0])
            if cross <= 0:
                raise DomainError("polygon must be strictly convex")
        rel = v - v[0]
        shape = cls("polygon", vertices=tuple(map(tuple, rel.tolist())))
        sx, sy = shape.bbox_size()
        raw = _inscribed_square_side(rel / np.array([sx, sy]))
        if raw <= 0:
            raise DomainError("polygon contains no axis-parallel square")
        return cls("polygon", vertices=shape.vertices, sigma=_integral_sigma(raw))

    # geometry ---------------------------------------------------------------

    def bbox_size(self) -> tuple[float, float]:
        if self.kind == "rectangle":
            return self.a, self.b
        if self.kind == "disk":
            return 2 * self.radius, 2 * self.radius
        v = np.asarray(self.vertices)
        return float(np.ptp(v[:, 0])), float(np.ptp(v[:, 1]))

    def normalizer(self) -> tuple[float, float]:
        """Axis scale factors mapping the shape's bounding box onto 1x1."""
        return self.bbox_size()

    def normalized(self) -> "ShapeSpec":
        sx, sy = self.normalizer()
        if self.kind == "rectangle":
            return ShapeSpec.square()
        if self.kind == "disk":
            return ShapeSpec("disk", radius=0.5, sigma=self.sigma)
        v = np.asarray(self.vertices) / np.array([sx, sy])
        return ShapeSpec("polygon", vertices=tuple(map(tuple, v.tolist())), sigma=self.sigma)

    @property
    def is_unit_square(self) -> bool:
        return self.kind == "rectangle" and self.a == 1.0 and self.b == 1.0

    def contains(self, placement: Placement, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Closed containment of points in the copy placed at ``placement``."""
        x, y = placement.x, placement.y
        if self.kind == "rectangle":
            return (x <= xs) & (xs <= x + self.a) & (y - self.b <= ys) & (ys <= y)
        if self.kind == "disk":
            r = self.radius
            tol = CONTAIN_TOL * max(r, 1.0)
            return (xs - x) ** 2 + (ys - y) ** 2 <= (r + tol) ** 2
        v = np.asarray(self.vertices)
        inside = np.ones(len(xs), dtype=bool)
        n = len(v)
        for i in range(n):
            ax, ay = v[i, 0] + x, v[i, 1] + y
            ex, ey = v[(i + 1) % n, 0] - v[i, 0], v[(i + 1) % n, 1] - v[i, 1]
            cross = ex * (ys - ay) - ey * (xs - ax)
            inside &= cross >= -CONTAIN_TOL * math.hypot(ex, ey)
        return inside

    def to_json(self) -> Any:
        if self.kind == "rectangle":
            if self.is_unit_square:
                return "square"
            return {"rect": {"a": self.a, "b": self.b}}
        if self.kind == "disk":
            return {"disk": {"radius": self.radius}}
        return {"polygon": [list(p) for p in self.vertices]}

    @classmethod
    def from_json(cls, obj: Any) -> "ShapeSpec":
        if obj is None or obj == "square":
            return cls.square()
        if isinstance(obj, dict):
            if "rect" in obj:
                return cls.rectangle(obj["rect"]["a"], obj["rect"]["b"])
            if "disk" in obj:
                return cls.disk(obj["disk"]["radius"])
            if "polygon" in obj:
                return cls.polygon(obj["polygon"])
        raise DomainError(f"unrecognized shape descriptor {obj!r}")


def _integral_sigma(raw: float) -> float:
    return 1.0 / math.ceil(1.0 / raw - 1e-12)


def _inscribed_square_side(v: np.ndarray) -> float:
    """Largest axis-parallel square inside a convex polygon (binary search on side)."""
    n = len(v)
    # half-planes a.x + b.y <= c
    hp = []
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        ex, ey = q - p
        hp.append((ey, -ex, ey * p[0] - ex * p[1]))

    def fits(side: float) -> bool:
        # the square [x, x+side] x [y, y+side] fits iff all four corners satisfy every half-plane;
        # for a half-plane a.x+b.y<=c the worst corner adds max(a,0)*side + max(b,0)*side.
        from scipy.optimize import linprog
        A = [[a, b] for a, b, _ in hp]
        rhs = [c - max(a, 0.0) * side - max(b, 0.0) * side for a, b, c in hp]
        res = linprog([0, 0], A_ub=A, b_ub=rhs, bounds=[(None, None), (None, None)], method="highs")
        return res.status == 0

    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


# grid -----------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    delta: float
    ax: float = 0.0
    ay: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"grid mesh must be positive, got {self.delta}")

    def cell_bounds(self, key: "CellKey") -> tuple[float, float, float, float]:
        """``(x0, x1, y0, y1)`` of the half-open cell ``[x0, x1) x [y0, y1)``."""
        d = self.delta
        return (self.ax + key.i * d, self.ax + (key.i + 1) * d,
                self.ay + key.j * d, self.ay + (key.j + 1) * d)


@dataclass(frozen=True, order=True)
class CellKey:
    i: int
    j: int


def cell_indices(xs: np.ndarray, ys: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    ci = np.floor((xs - grid.ax) / grid.delta).astype(np.int64)
    cj = np.floor((ys - grid.ay) / grid.delta).astype(np.int64)
    return ci, cj


def group_by_cell(xs: np.ndarray, ys: np.ndarray, grid: GridSpec):
    """Sorted cell keys plus, per cell, the input indices in input order.

    Returns ``(keys, order, starts)`` where ``keys`` is a ``(t, 2)`` int array
    sorted lexicographically, and ``order[starts[c]:starts[c+1]]`` lists the
    points of cell ``c``.
    """
    ci, cj = cell_indices(xs, ys, grid)
    if len(ci) == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.intp), np.zeros(1, dtype=np.intp)
    order = np.lexsort((np.arange(len(ci)), cj, ci))
    sci, scj = ci[order], cj[order]
    brk = np.flatnonzero((np.diff(sci) != 0) | (np.diff(scj) != 0)) + 1
    starts = np.concatenate(([0], brk, [len(ci)])).astype(np.intp)
    keys = np.stack([sci[starts[:-1]], scj[starts[:-1]]], axis=1)
    return keys, order, starts


def bucket_by_cell(points: WeightedPointSet, grid: GridSpec) -> dict[CellKey, WeightedPointSet]:
    keys, order, starts = group_by_cell(points.xs, points.ys, grid)
    out: dict[CellKey, WeightedPointSet] = {}
    for c in range(len(keys)):
        out[CellKey(int(keys[c, 0]), int(keys[c, 1]))] = points.subset(order[starts[c]:starts[c + 1]])
    return out


# coverage -------------------------------------------------------------------

def covered_mask(points: WeightedPointSet, shape: ShapeSpec, placements: Iterable[Placement]) -> np.ndarray:
    mask = np.zeros(len(points), dtype=bool)
    for p in placements:
        mask |= shape.contains(p, points.xs, points.ys)
    return mask


def coverage(points: WeightedPointSet, shape: ShapeSpec, placements: Iterable[Placement]) -> float:
    """Total weight of points inside the union of the placed copies."""
    mask = covered_mask(points, shape, placements)
    return math.fsum(points.ws[mask].tolist())


def make_placement_set(points: WeightedPointSet, shape: ShapeSpec,
                       placements: Iterable[Placement], meta: str) -> PlacementSet:
    placements = tuple(placements)
    return PlacementSet(placements, coverage(points, shape, placements), meta)


# instance I/O -----------------------------------------------------------------

def _as_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


def _check_row(x: float, y: float, w: float, lineno: int | None) -> None:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError(f"line {lineno}: non-finite coordinate" if lineno else "non-finite coordinate")
    if not math.isfinite(w) or w < 0:
        raise DomainError(f"line {lineno}: negative or non-finite weight {w}" if lineno
                          else f"negative or non-finite weight {w}")


def load_instance(source, fmt: str = "csv") -> tuple[WeightedPointSet, dict]:
    """Parse a CSV (``x,y,w`` per line) or JSON (``{"points": [[x,y,w], ...]}``) instance.

    ``source`` may be bytes, text, or a readable stream. Returns the point set
    and a metadata dict (CSV: comment lines; JSON: all keys except ``points``).
    """
    text = _as_text(source)
    if fmt == "csv":
        rows: list[tuple[float, float, float]] = []
        comments: list[str] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields, got {len(parts)}", lineno)
            try:
                x, y, w = (float(p) for p in parts)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            _check_row(x, y, w, lineno)
            rows.append((x, y, w))
        return WeightedPointSet.from_points(rows), {"comments": comments}
    if fmt == "json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
        if not isinstance(obj, dict) or "points" not in obj:
            raise ParseError("JSON instance needs a 'points' array")
        rows = []
        for k, row in enumerate(obj["points"]):
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ParseError(f"point {k}: expected [x, y, w]")
            try:
                x, y, w = (float(v) for v in row)
            except (TypeError, ValueError) as exc:
                raise ParseError(f"point {k}: {exc}") from None
            _check_row(x, y, w, None)
            rows.append((x, y, w))
        meta = {k: v for k, v in obj.items() if k != "points"}
        return WeightedPointSet.from_points(rows), meta
    raise DomainError(f"unknown instance format {fmt!r}")


def dump_instance(points: WeightedPointSet, fmt: str = "csv", header: str | None = None) -> str:
    """Serialize with ``repr`` floats so that ``load_instance`` round-trips bit-exactly."""
    if fmt == "csv":
        buf = io.StringIO()
        if header is not None:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        for x, y, w in zip(points.xs.tolist(), points.ys.tolist(), points.ws.tolist()):
            buf.write(f"{x!r},{y!r},{w!r}\n")
        return buf.getvalue()
    if fmt == "json":
        rows = [[x, y, w] for x, y, w in zip(points.xs.tolist(), points.ys.tolist(), points.ws.tolist())]
        return json.dumps({"points": rows})
    raise DomainError(f"unknown instance format {fmt!r}")


def solution_to_json(solution: PlacementSet, *, epsilon: float | None, m: int,
                     shape: ShapeSpec, extra: dict | None = None) -> dict:
    out = {
        "placements": [p.as_list() for p in solution.placements],
        "covered_weight": solution.covered_weight,
        "epsilon": epsilon,
        "m": m,
        "shape": shape.to_json(),
        "solver": solution.meta,
    }
    if extra:
        out.update(extra)
    return out
