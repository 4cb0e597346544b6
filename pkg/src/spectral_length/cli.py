"""Command-line front end.

Builds a triple from a TOML config, then runs one of: ``check`` (axiom
report), ``distance`` (distance table), ``sweep`` (refinement study),
``propagator`` (momentum-space propagator) or ``triple-export``.

Exit codes: 0 success, 2 config error, 3 axiom failure, 4 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import spectral_triple as st
from .dirac_lattice import (LatticeError, circle_triple, conformal_sine_metric,
                            constant_metric, torus_triple, two_point_triple)
from .distance import DistanceError, distance_table
from .geodesic import circle_geodesic, graph_shortest_path, torus_geodesic
from .propagator import (DEFAULT_EPS, ON_SHELL_TOL, check_inverse, inverse_bound,
                         momentum_propagator, slash)
from .minkowski import norm_sq

SCHEMA_VERSION = 1
ALL_PAIRS_MAX_SITES = 512

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_AXIOM = 3
EXIT_NONCONVERGED = 4

DISTANCE_HEADER = ["p", "q", "spectral_distance", "geodesic_distance", "rel_error",
                   "solver", "constraint_norm", "iterations", "lower_bound"]
SWEEP_HEADER = ["N", "max_rel_error_vs_continuum", "mean_rel_error", "runtime_ms"]
CHECK_HEADER = ["check_name", "value", "pass"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    geometry: dict
    solver: dict = field(default_factory=dict)
    query: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(doc)


def parse_config(doc: dict) -> ExperimentConfig:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    if not isinstance(doc.get("geometry"), dict):
        raise ConfigError("config needs a [geometry] table")
    tables = {}
    for key in ("solver", "query", "sweep", "output"):
        value = doc.get(key, {})
        if not isinstance(value, dict):
            raise ConfigError(f"[{key}] must be a table")
        tables[key] = value
    return ExperimentConfig(geometry=doc["geometry"], **tables)


def _number(block: dict, key: str, default=None, *, positive=False, integer=False):
    if key not in block:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key!r} must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{key!r} must be positive, got {value!r}")
    return value


def metric_from_config(geo: dict, length: float):
    block = geo.get("metric", {"family": "constant", "c": 1.0})
    if not isinstance(block, dict):
        raise ConfigError("[geometry.metric] must be a table")
    family = block.get("family", "constant")
    try:
        if family == "constant":
            return constant_metric(_number(block, "c", 1.0, positive=True))
        if family == "conformal-sine":
            amplitude = _number(block, "amplitude")
            k = _number(block, "k", 1, integer=True)
            return conformal_sine_metric(amplitude, k, length)
    except LatticeError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown metric family {family!r} (expected constant or conformal-sine)")


def build_triple(geo: dict, n: int | None = None) -> st.SpectralTriple:
    """Triple for the [geometry] block; ``n`` overrides the site count (sweeps)."""
    kind = geo.get("kind")
    try:
        if kind == "circle1d":
            length = _number(geo, "length", positive=True)
            sites = n if n is not None else _number(geo, "n", integer=True, positive=True)
            return circle_triple(sites, length, metric_from_config(geo, length))
        if kind == "torus2d":
            nx = n if n is not None else _number(geo, "nx", integer=True, positive=True)
            ny = n if n is not None else _number(geo, "ny", integer=True, positive=True)
            lx = _number(geo, "lx", positive=True)
            ly = _number(geo, "ly", positive=True)
            return torus_triple(nx, ny, lx, ly, scheme=geo.get("scheme", "block"))
        if kind == "two_point":
            return two_point_triple(_number(geo, "m", positive=True))
    except (LatticeError, st.SpectralTripleError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown geometry kind {kind!r} (expected circle1d, torus2d or two_point)")


def solver_options(cfg: ExperimentConfig, args) -> tuple[str, dict]:
    block = cfg.solver
    method = args.solver or block.get("method", "auto")
    if method not in ("auto", "exact", "subgradient"):
        raise ConfigError(f"unknown solver {method!r}")
    opts = {}
    for key, integer in (("max_iter", True), ("restarts", True), ("seed", True),
                         ("feasibility_tol", False), ("step0", False)):
        if key in block:
            opts[key] = _number(block, key, integer=integer)
    if args.seed is not None:
        opts["seed"] = args.seed
    return method, opts


def query_pairs(cfg: ExperimentConfig, t: st.SpectralTriple, force: bool) -> list[tuple[int, int]]:
    pairs = cfg.query.get("pairs", [])
    n = t.n_points
    if pairs == "all-pairs":
        if n > ALL_PAIRS_MAX_SITES and not force:
            raise ConfigError(
                f"all-pairs on {n} sites exceeds the {ALL_PAIRS_MAX_SITES}-site cap; pass --force")
        return [(p, q) for p in range(n) for q in range(p, n)]
    if not isinstance(pairs, list):
        raise ConfigError('query.pairs must be a list of [p, q] or "all-pairs"')
    out = []
    for pair in pairs:
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(s, int) and not isinstance(s, bool) for s in pair)):
            raise ConfigError(f"bad query pair {pair!r}")
        if not all(0 <= s < n for s in pair):
            raise ConfigError(f"query pair {pair!r} out of range for {n} sites")
        out.append((pair[0], pair[1]))
    return out


def lattice_geodesic(t: st.SpectralTriple, p: int, q: int) -> float:
    """Reference distance between two sites: graph geodesic, or the flat torus."""
    if p == q:
        return 0.0
    if t.edge_local:
        return graph_shortest_path(t.edges, p, q, t.n_points)
    geo = t.geometry
    if geo is not None and geo.kind == "torus2d":
        return torus_geodesic(t.points[p], t.points[q], *geo.lengths)
    return math.nan


def _rel_error(value: float, ref: float) -> float:
    if ref == 0.0:
        return abs(value)
    return abs(value - ref) / ref


def _emit(text: str, cfg: ExperimentConfig | None, args):
    path = args.out or (cfg.output.get("path") if cfg else None)
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_check(cfg: ExperimentConfig, args) -> int:
    t = build_triple(cfg.geometry)
    report = st.check_axioms(t)
    _emit(write_csv(CHECK_HEADER, report.rows()), cfg, args)
    if not report.passed:
        for msg in report.failures:
            print(f"axiom failure: {msg}", file=sys.stderr)
        return EXIT_AXIOM
    return EXIT_OK


def cmd_distance(cfg: ExperimentConfig, args) -> int:
    t = build_triple(cfg.geometry)
    method, opts = solver_options(cfg, args)
    pairs = query_pairs(cfg, t, args.force)
    if method == "exact" and not t.edge_local:
        raise ConfigError("the exact solver needs an edge-local geometry")
    rows = []
    status = EXIT_OK
    for p, q, res in distance_table(t, pairs, solver=method, **opts):
        ref = lattice_geodesic(t, p, q)
        rows.append((p, q, res.value, ref, _rel_error(res.value, ref), res.solver,
                     res.constraint_norm, res.iterations, res.lower_bound_only))
        if not res.converged:
            status = EXIT_NONCONVERGED
    _emit(write_csv(DISTANCE_HEADER, rows), cfg, args)
    if status == EXIT_NONCONVERGED:
        print("subgradient solver hit max_iter before stalling on some pairs; "
              "values are lower bounds", file=sys.stderr)
    return status


def _sweep_plan(cfg: ExperimentConfig):
    sizes = cfg.sweep.get("n")
    if (not isinstance(sizes, list) or not sizes
            or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 2 for s in sizes)):
        raise ConfigError("sweep.n must be a non-empty list of integers >= 2")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"sweep.n must be strictly ascending, got {sizes}")
    endpoints = cfg.sweep.get("endpoints")
    if not isinstance(endpoints, list) or not endpoints:
        raise ConfigError("sweep.endpoints must be a non-empty list of endpoint pairs")
    return sizes, endpoints


def _snap(x: float, a: float, n: int) -> int:
    return int(round(x / a)) % n


def _sweep_errors(cfg: ExperimentConfig, t: st.SpectralTriple, endpoints, method, opts):
    geo = t.geometry
    pairs, refs = [], []
    if geo.kind == "circle1d":
        length, a, n = geo.lengths[0], geo.spacing[0], geo.sites[0]
        for pair in endpoints:
            try:
                x, y = (float(v) % length for v in pair)
            except (TypeError, ValueError):
                raise ConfigError(f"bad circle endpoint pair {pair!r}") from None
            pairs.append((_snap(x, a, n), _snap(y, a, n)))
            refs.append(circle_geodesic(x, y, length, geo.metric))
    else:
        (lx, ly), (ax, ay), (nx, ny) = geo.lengths, geo.spacing, geo.sites
        for pair in endpoints:
            try:
                (x0, y0), (x1, y1) = pair
                x0, x1 = float(x0) % lx, float(x1) % lx
                y0, y1 = float(y0) % ly, float(y1) % ly
            except (TypeError, ValueError):
                raise ConfigError(f"bad torus endpoint pair {pair!r}") from None
            pairs.append((_snap(x0, ax, nx) * ny + _snap(y0, ay, ny),
                          _snap(x1, ax, nx) * ny + _snap(y1, ay, ny)))
            refs.append(torus_geodesic((x0, y0), (x1, y1), lx, ly))
    converged = True
    errors = []
    for (p, q), ref in zip(pairs, refs):
        res = distance_table(t, [(p, q)], solver=method, **opts)[0][2]
        converged &= res.converged
        errors.append(_rel_error(res.value, ref))
    return errors, converged


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    kind = cfg.geometry.get("kind")
    if kind not in ("circle1d", "torus2d"):
        raise ConfigError(f"sweeps need a circle1d or torus2d geometry, got {kind!r}")
    sizes, endpoints = _sweep_plan(cfg)
    method, opts = solver_options(cfg, args)
    rows = []
    status = EXIT_OK
    for n in sizes:
        t = build_triple(cfg.geometry, n)
        if method == "exact" and not t.edge_local:
            raise ConfigError("the exact solver needs an edge-local geometry")
        start = time.perf_counter()
        errors, converged = _sweep_errors(cfg, t, endpoints, method, opts)
        runtime_ms = 1000.0 * (time.perf_counter() - start)
        rows.append((n, max(errors), float(np.mean(errors)), runtime_ms))
        if not converged:
            status = EXIT_NONCONVERGED
    _emit(write_csv(SWEEP_HEADER, rows), cfg, args)
    return status


def _format_complex(z: complex) -> str:
    return "%.17g%+.17gj" % (z.real, z.imag)


def cmd_propagator(args) -> int:
    p = args.p
    if args.m < 0:
        raise ConfigError(f"mass must be non-negative, got {args.m}")
    eps = args.eps if args.eps is not None else DEFAULT_EPS
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    off = norm_sq(p) - args.m ** 2
    on_shell = abs(off) <= ON_SHELL_TOL
    if on_shell and args.eps is None:
        raise ConfigError(
            f"p is on shell (p^2 - m^2 = {off:.3e}); pass --eps to evaluate the regularised propagator")
    s_f = momentum_propagator(p, args.m, eps)
    lines = ["S_F(p) ="]
    for row in s_f:
        lines.append("  " + "  ".join(_format_complex(z) for z in row))
    if on_shell:
        resid = float(np.max(np.abs((slash(p) - args.m * np.eye(4)) @ s_f - np.eye(4))))
        lines.append(f"residual = {_fmt(resid)} (on shell: no inverse bound applies)")
    else:
        lines.append(f"residual = {_fmt(check_inverse(p, args.m, eps))}")
        lines.append(f"bound = {_fmt(inverse_bound(p, args.m, eps))}")
    _emit("\n".join(lines) + "\n", None, args)
    return EXIT_OK


def cmd_triple_export(cfg: ExperimentConfig, args) -> int:
    t = build_triple(cfg.geometry)
    _emit(st.dumps(t) + "\n", cfg, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment config")
    common.add_argument("--seed", type=int, help="override solver.seed")
    common.add_argument("--out", help="output path (default: output.path, else stdout)")
    common.add_argument("--solver", choices=["exact", "subgradient", "auto"],
                        help="override solver.method")
    common.add_argument("--force", action="store_true",
                        help=f"allow all-pairs queries above {ALL_PAIRS_MAX_SITES} sites")

    parser = argparse.ArgumentParser(prog="spectral-length", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="axiom report as CSV")
    sub.add_parser("distance", parents=[common], help="distance table as CSV")
    sub.add_parser("sweep", parents=[common], help="refinement sweep as CSV")
    sub.add_parser("triple-export", parents=[common], help="serialise the triple as JSON")
    prop = sub.add_parser("propagator", parents=[common], help="momentum-space propagator")
    prop.add_argument("--p", type=float, nargs=4, required=True, metavar=("P0", "P1", "P2", "P3"),
                      help="contravariant momentum components")
    prop.add_argument("--m", type=float, default=0.0, help="mass (default 0)")
    prop.add_argument("--eps", type=float, help=f"i*eps regulator (default {DEFAULT_EPS})")
    return parser


COMMANDS = {
    "check": cmd_check,
    "distance": cmd_distance,
    "sweep": cmd_sweep,
    "triple-export": cmd_triple_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "propagator":
            return cmd_propagator(args)
        if not args.config:
            raise ConfigError(f"{args.command} needs --config")
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, DistanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
