"""Command-line front end: ``geocover solve|gen|bench``."""
from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from .core import (CapExceededError, DomainError, GeoCoverError, ShapeSpec, WeightedPointSet,
                   coverage, dump_instance, load_instance, solution_to_json)
from .pipeline import solve

EXIT_OK, EXIT_INPUT, EXIT_VERIFY_CAP = 0, 2, 3


# parsing helpers --------------------------------------------------------------

def _floats(text: str, count: int | None, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise DomainError(f"bad {what}: {text!r}") from None
    if count is not None and len(vals) != count:
        raise DomainError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def parse_shape(text: str | None) -> ShapeSpec | None:
    """``square``, ``rect:a,b``, ``disk:r`` or ``poly:FILE`` (JSON list of [x, y])."""
    if text is None:
        return None
    if text == "square":
        return ShapeSpec.square()
    kind, _, arg = text.partition(":")
    if kind == "rect":
        a, b = _floats(arg, 2, "rect")
        return ShapeSpec.rectangle(a, b)
    if kind == "disk":
        (r,) = _floats(arg, 1, "disk")
        return ShapeSpec.disk(r)
    if kind == "poly":
        try:
            verts = json.loads(Path(arg).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read polygon file {arg!r}: {exc}") from None
        if isinstance(verts, dict):
            verts = verts.get("polygon", verts.get("vertices"))
        return ShapeSpec.polygon(verts)
    raise DomainError(f"unknown shape {text!r}")


def _read_instance(path: str) -> tuple[WeightedPointSet, dict]:
    fmt = "json" if path.lower().endswith(".json") else "csv"
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DomainError(f"cannot read {path!r}: {exc.strerror}") from None
    return load_instance(data, fmt)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# solve ------------------------------------------------------------------------

def _oracle_weight(points: WeightedPointSet, shape: ShapeSpec, m: int) -> float:
    from .oracle import brute_force_squares
    from .shapes_ext import solve_exact_general
    if shape.kind == "rectangle":
        return brute_force_squares(points.scaled(1.0 / shape.a, 1.0 / shape.b), m).covered_weight
    return solve_exact_general(points, shape, m).covered_weight


def cmd_solve(args) -> int:
    try:
        points, meta = _read_instance(args.input)
        shape = parse_shape(args.shape) or ShapeSpec.from_json(meta.get("shape"))
        start = time.perf_counter()
        sol = solve(points, shape, args.epsilon, args.m, exact=args.exact,
                    threads=args.threads, seed=args.seed)
        millis = (time.perf_counter() - start) * 1000.0
    except GeoCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    extra = {"millis": round(millis, 3)}
    if args.verify:
        try:
            best = _oracle_weight(points, shape, args.m)
        except CapExceededError as exc:
            print(f"verify: {exc}", file=sys.stderr)
            return EXIT_VERIFY_CAP
        extra["oracle_weight"] = best
        extra["ratio_vs_oracle"] = sol.covered_weight / best if best > 0 else 1.0
    out = solution_to_json(sol, epsilon=args.epsilon, m=args.m, shape=shape, extra=extra)
    _emit(json.dumps(out) + "\n", args.output)
    return EXIT_OK


# gen --------------------------------------------------------------------------

def generate(n: int, dist: str = "uniform", weights: str = "unit",
             bbox=(0.0, 0.0, 100.0, 100.0), seed: int = 0) -> WeightedPointSet:
    """Synthetic instance; deterministic for a fixed seed."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    x0, y0, x1, y1 = bbox
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"empty bbox {bbox}")
    rng = np.random.default_rng(seed)
    kind, _, arg = dist.partition(":")
    if kind == "uniform":
        xs, ys = rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)
    elif kind == "clusters":
        k, spread = _floats(arg, 2, "clusters")
        k = int(k)
        if k < 1 or spread < 0:
            raise DomainError("clusters needs k >= 1 and spread >= 0")
        cx, cy = rng.uniform(x0, x1, k), rng.uniform(y0, y1, k)
        lab = np.arange(n) % k
        xs = cx[lab] + rng.normal(0.0, spread, n)
        ys = cy[lab] + rng.normal(0.0, spread, n)
    elif kind == "grid":
        side = max(1, math.ceil(math.sqrt(n)))
        t = np.arange(n)
        xs = x0 + (t % side + 0.5) * (x1 - x0) / side
        ys = y0 + (t // side + 0.5) * (y1 - y0) / side
    else:
        raise DomainError(f"unknown distribution {dist!r}")
    wkind, _, warg = weights.partition(":")
    if wkind == "unit":
        ws = np.ones(n)
    elif wkind == "uniform":
        lo, hi = _floats(warg, 2, "uniform weights")
        if not 0 <= lo <= hi:
            raise DomainError("uniform weights need 0 <= lo <= hi")
        ws = rng.uniform(lo, hi, n)
    elif wkind == "heavy":
        (frac,) = _floats(warg, 1, "heavy")
        if not 0 <= frac <= 1:
            raise DomainError("heavy fraction must lie in [0, 1]")
        ws = np.where(rng.random(n) < frac, 100.0, 1.0)
    else:
        raise DomainError(f"unknown weights {weights!r}")
    return WeightedPointSet(xs, ys, ws)


def cmd_gen(args) -> int:
    try:
        bbox = _floats(args.bbox, 4, "bbox")
        pts = generate(args.n, args.dist, args.weights, bbox, args.seed)
    except GeoCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    header = (f"geocover gen n={args.n} dist={args.dist} weights={args.weights} "
              f"bbox={args.bbox} seed={args.seed}\nx,y,w")
    _emit(dump_instance(pts, "csv", header=header), args.output)
    return EXIT_OK


# bench ------------------------------------------------------------------------

def bench_rows(sizes, epsilon: float, m: int, repeats: int = 3, density: float = 0.1,
               seed: int = 0, threads: int = 1):
    """Yield ``(n, epsilon, m, median millis, weight)`` on uniform instances of fixed density."""
    shape = ShapeSpec.square()
    for n in sizes:
        side = math.sqrt(n / density)
        pts = generate(n, "uniform", "unit", (0.0, 0.0, side, side), seed)
        times, weight = [], 0.0
        for _ in range(repeats):
            start = time.perf_counter()
            sol = solve(pts, shape, epsilon, m, threads=threads)
            times.append((time.perf_counter() - start) * 1000.0)
            weight = sol.covered_weight
        yield n, epsilon, m, statistics.median(times), weight


def cmd_bench(args) -> int:
    try:
        sizes = [int(float(t)) for t in args.sizes.split(",")]
    except ValueError:
        print(f"error: bad sizes {args.sizes!r}", file=sys.stderr)
        return EXIT_INPUT
    out = sys.stdout if not args.output else open(args.output, "w")
    try:
        out.write("n\tepsilon\tm\tmillis\tweight\n")
        if args.warmup:
            list(bench_rows([min(sizes)], args.epsilon, args.m, 1, args.density, args.seed))
        for n, eps, m, ms, w in bench_rows(sizes, args.epsilon, args.m, args.repeats,
                                           args.density, args.seed, args.threads):
            out.write(f"{n}\t{eps}\t{m}\t{ms:.3f}\t{w!r}\n")
            out.flush()
    except GeoCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geocover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    threads = os.cpu_count() or 1

    p = sub.add_parser("solve", help="place m copies of a shape")
    p.add_argument("--input", required=True, help="instance file (.csv or .json)")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--shape", default=None, help="square | rect:a,b | disk:r | poly:FILE")
    p.add_argument("--exact", action="store_true", help="exact sweep for one square")
    p.add_argument("--verify", action="store_true", help="compare against the brute-force oracle")
    p.add_argument("--threads", type=int, default=threads)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate a synthetic instance (csv)")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dist", default="uniform", help="uniform | clusters:k,spread | grid")
    g.add_argument("--weights", default="unit", help="unit | uniform:lo,hi | heavy:frac")
    g.add_argument("--bbox", default="0,0,100,100", help="x0,y0,x1,y1")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", default=None)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="scaling benchmark, tsv on stdout")
    b.add_argument("--sizes", default="1e4,2e4,4e4")
    b.add_argument("--epsilon", type=float, default=0.2)
    b.add_argument("--m", type=int, default=10)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--density", type=float, default=0.1, help="points per unit area")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--warmup", action="store_true", help="run the smallest size once first")
    b.add_argument("--output", default=None)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
