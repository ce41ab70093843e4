"""Command-line front end: ``fraclap mesh | solve | study``.

Exit codes: 0 success, 2 input error, 3 monotonicity or verification
failure, 4 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analysis import SchemeConfig, StudyAborted, exact_solution_ball, nodal_error, run_convergence_study
from .mesh import (MeshError, build_disk_mesh, build_interval_mesh, classify_nodes, compute_shape_constants,
                   export_mesh, import_mesh)
from .operator import AssemblyError, assemble, dump_matrix, verify_monotone
from .solver import SolverError, solve_direct, solve_iterative

log = logging.getLogger("fraclap")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3
EXIT_SOLVER = 4

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

STUDY_KEYS = {
    "study": {"dimension", "s", "mode", "alpha", "mu", "delta0", "beta", "h_values", "fit_levels",
              "cell_samples", "tolerance", "target_rate"},
    "output": {"json", "csv"},
}


class InputError(Exception):
    pass


def _setup_logging():
    name = os.environ.get("FRACLAP_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(name)
    logging.basicConfig(level=level or logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.warning("unknown FRACLAP_LOG value %r, using 'warn'", name)


# -- mesh ----------------------------------------------------------------------


def cmd_mesh(args) -> int:
    if args.dim == 1:
        a, b = args.range if args.range else (-1.0, 1.0)
        mesh = build_interval_mesh(a, b, args.h, args.mu)
    else:
        mesh = build_disk_mesh(args.radius, args.h, args.mu)
    Path(args.out).write_text(export_mesh(mesh), encoding="utf-8")
    rep = compute_shape_constants(mesh)
    out = {"vertices": mesh.n_vertices, "cells": mesh.n_cells, **rep.as_dict()}
    print(json.dumps(out, indent=1))
    return EXIT_OK


# -- solve ---------------------------------------------------------------------


def _is_unit_ball(mesh) -> bool:
    bv = mesh.vertices[mesh.boundary]
    if mesh.dimension == 1:
        return bool(np.allclose(np.sort(bv[:, 0]), [-1.0, 1.0], rtol=0, atol=1e-12))
    return bool(np.all(np.abs(np.hypot(bv[:, 0], bv[:, 1]) - 1.0) <= 1e-12))


def cmd_solve(args) -> int:
    try:
        mesh = import_mesh(Path(args.mesh).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read mesh: {exc}") from exc
    cls = classify_nodes(mesh, args.alpha, args.delta0)
    try:
        A = assemble(mesh, cls, args.s)
    except AssemblyError as exc:
        log.error("%s", exc)
        print(f"monotonicity check failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if args.debug_flip_sign:
        # fault injection for testing the verification path
        if A.size > 1:
            A.entries[0, 1] = abs(A.entries[0, 1]) + abs(A.entries[0, 0])
        else:
            A.entries[0, 0] = -abs(A.entries[0, 0])
        A._lu = None
    if args.dump_matrix:
        dump_matrix(A, args.dump_matrix)
    rep = verify_monotone(A)
    log.info("%s", rep.summary())
    if not rep.ok:
        print(f"monotonicity check failed: {rep.summary()}", file=sys.stderr)
        return EXIT_VERIFY
    f = np.ones(A.size)
    try:
        if args.solver == "direct":
            sol = solve_direct(A, f, mesh=mesh)
        else:
            sol = solve_iterative(A, f, tol=args.tol, max_iter=args.max_iter, mesh=mesh)
    except SolverError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    sol.dump_json(args.out)
    summary = {"N": A.size, "solver": sol.solver_tag, "residual": sol.residual_norm}
    if _is_unit_ball(mesh):
        summary["linf_error"] = nodal_error(sol, lambda x: exact_solution_ball(mesh.dimension, args.s, x))
    print(json.dumps(summary))
    return EXIT_OK


# -- study ---------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def load_study_config(path: Path) -> tuple[SchemeConfig, dict]:
    """Parse an INI study file; returns (config, extras) with tolerance, target and outputs."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with path.open(encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise InputError(f"cannot read study config {path}: {exc}") from exc
    for sec in cp.sections():
        if sec not in STUDY_KEYS:
            raise InputError(f"unknown section [{sec}] in {path}")
        unknown = set(cp[sec]) - STUDY_KEYS[sec]
        if unknown:
            raise InputError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
    if "study" not in cp:
        raise InputError(f"missing [study] section in {path}")
    st = cp["study"]
    try:
        kw = {"s": st.getfloat("s"), "dimension": st.getint("dimension", 1),
              "h_values": tuple(_floats(st.get("h_values", ""))), "mode": st.get("mode", "custom"),
              "alpha": st.getfloat("alpha", 1.0), "mu": st.getfloat("mu", 1.0),
              "beta": st.getfloat("beta", math.inf), "fit_levels": st.getint("fit_levels", 4),
              "cell_samples": st.getboolean("cell_samples", False)}
        if kw["s"] is None:
            raise InputError("missing required key 's'")
        if "delta0" in st:
            kw["delta0"] = st.getfloat("delta0")
        cfg = SchemeConfig(**kw)
        tol = st.getfloat("tolerance") if "tolerance" in st else None
        target = st.getfloat("target_rate") if "target_rate" in st else None
    except ValueError as exc:
        raise InputError(f"invalid study config {path}: {exc}") from exc
    out = cp["output"] if "output" in cp else {}
    base = path.stem
    extras = {"tolerance": tol, "target_rate": target,
              "json": out.get("json", f"{base}.json"), "csv": out.get("csv", f"{base}.csv")}
    return cfg, extras


def cmd_study(args) -> int:
    path = Path(args.config)
    cfg, extras = load_study_config(path)
    try:
        rep = run_convergence_study(cfg, jobs=args.jobs)
    except (StudyAborted, AssemblyError) as exc:
        print(f"study aborted: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except SolverError as exc:
        print(f"study aborted: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out_dir = Path(args.out_dir) if args.out_dir else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    rep.write(out_dir / extras["json"], out_dir / extras["csv"])
    var = rep.variable
    for r in rep.runs:
        print(f"h={r.h:<12.6g} N={r.N:<7d} error={r.linf_error:.6e}")
    print(f"fitted rate (vs {var}) {rep.fitted_rate:.4f}, expected {rep.expected_rate:.4f}"
          + (" (up to a log factor)" if rep.log_factor_flag else ""))
    tol = extras["tolerance"]
    if tol is None:
        return EXIT_OK
    target = extras["target_rate"] if extras["target_rate"] is not None else rep.expected_rate
    ok = abs(rep.fitted_rate - target) <= tol
    print(f"{'PASS' if ok else 'FAIL'}: fitted {rep.fitted_rate:.4f} vs target {target:.4f} +/- {tol:g}")
    return EXIT_OK if ok else EXIT_VERIFY


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraclap", description="Monotone finite differences for the "
                                "integral fractional Laplacian on 1D/2D graded grids.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate a graded interval or disk mesh")
    m.add_argument("--dim", type=int, choices=(1, 2), required=True)
    m.add_argument("--h", type=float, required=True)
    m.add_argument("--mu", type=float, default=1.0)
    m.add_argument("--out", required=True)
    m.add_argument("--range", type=float, nargs=2, metavar=("A", "B"), help="1D interval (default -1 1)")
    m.add_argument("--radius", type=float, default=1.0, help="2D disk radius")
    m.set_defaults(func=cmd_mesh)

    s = sub.add_parser("solve", help="assemble, verify and solve with f = 1")
    s.add_argument("--mesh", required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--delta0", type=float, default=None)
    s.add_argument("--solver", choices=("direct", "gs"), default="direct")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.add_argument("--out", required=True)
    s.add_argument("--dump-matrix", metavar="PATH")
    s.add_argument("--debug-flip-sign", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("study", help="run a convergence study from an INI config")
    st.add_argument("config")
    st.add_argument("--jobs", type=int, default=1)
    st.add_argument("--out-dir", default=None)
    st.set_defaults(func=cmd_study)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
