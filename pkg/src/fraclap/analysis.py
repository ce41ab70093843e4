"""Exact solution on the unit ball, error measurement and convergence studies."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .mesh import Mesh, build_disk_mesh, build_interval_mesh, classify_nodes
from .operator import assemble, verify_monotone
from .solver import DiscreteSolution, solve_direct

log = logging.getLogger(__name__)

MODES = ("custom", "optimal", "huang_oberman")
CSV_COLUMNS = ("h", "N", "mu", "alpha", "s", "linf_error", "fitted_rate", "expected_rate")


class StudyAborted(RuntimeError):
    """A refinement level failed its monotonicity checks."""

    def __init__(self, h: float, summary: str):
        super().__init__(f"monotonicity check failed at h={h!r}: {summary}")
        self.h = h
        self.summary = summary


# -- exact solution and errors -------------------------------------------------


def exact_solution_ball(n: int, s: float, x) -> Union[float, np.ndarray]:
    """Solution of (-Delta)^s u = 1 in the unit ball, u = 0 outside.

    ``x`` is a point (scalar in 1D) or an array of points of shape (m, n).
    """
    if n not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {n}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} outside (0, 1)")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 or (x.ndim == 1 and n > 1 and x.shape[0] == n)
    pts = x.reshape(-1, n)
    c = 2.0 ** (-2.0 * s) * math.gamma(0.5 * n) / (math.gamma(0.5 * n + s) * math.gamma(1.0 + s))
    r2 = np.sum(pts * pts, axis=1)
    val = np.where(r2 < 1.0, c * np.maximum(1.0 - r2, 0.0) ** s, 0.0)
    return float(val[0]) if scalar else val


# barycentric sample points per cell for the L-infinity surrogate
_SAMPLES = {1: np.array([[5 / 6, 1 / 6], [0.5, 0.5], [1 / 6, 5 / 6]]),
            2: np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])}


def nodal_error(sol: DiscreteSolution, exact: Callable, samples: bool = False) -> Union[float, tuple[float, float]]:
    """Max nodal error over interior nodes; with ``samples`` also the per-cell sampled max.

    ``exact`` maps an (m, n) array of points to m values.
    """
    mesh = sol.mesh
    if mesh is None or sol.interior_ids is None:
        raise ValueError("solution is not attached to a mesh")
    x = mesh.vertices[sol.interior_ids]
    ue = np.asarray(exact(x), dtype=float).reshape(-1)
    err = float(np.max(np.abs(ue - sol.nodal_values))) if len(ue) else 0.0
    if not samples:
        return err
    u = sol.full_values()
    B = _SAMPLES[mesh.dimension]
    cell_pts = mesh.vertices[mesh.cells]
    pts = np.einsum("qk,ckd->cqd", B, cell_pts).reshape(-1, mesh.dimension)
    uh = np.einsum("qk,ck->cq", B, u[mesh.cells]).reshape(-1)
    cell_err = float(np.max(np.abs(np.asarray(exact(pts), dtype=float).reshape(-1) - uh)))
    return err, cell_err


# -- theoretical rates ---------------------------------------------------------


def _is_int(v: float) -> bool:
    return math.isfinite(v) and abs(v - round(v)) < 1e-12


def _betas(beta: float) -> tuple[float, float]:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return min(beta, 2.0), min(beta, 4.0)


def optimal_alpha(beta: float = math.inf) -> float:
    bt, bh = _betas(beta)
    return bt / bh


def optimal_mu(n: int, s: float, beta: float = math.inf) -> float:
    """Smallest grading exponent achieving the optimal rate in N (with alpha optimal)."""
    bt, bh = _betas(beta)
    low = bt / s - 2.0 * bt / bh
    if n == 1:
        return max(1.0, low)
    crit = n / (n - 1)
    if (crit + 2.0 * bt / bh) * s > bt:
        return max(1.0, low)
    return crit


def expected_rate(n: int, s: float, mu: float, alpha: float, beta: float = math.inf,
                  variable: str = "h") -> tuple[float, bool]:
    """Theoretical slope of log(error) and whether a log factor is present.

    For ``variable="h"`` the slope is against log h (positive); for "N" it is
    against log N (negative), using N ~ h^{-n} for mu < n/(n-1) and
    N ~ h^{(1-n) mu} beyond.
    """
    if n not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {n}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} outside (0, 1)")
    if mu < 1.0 or not 0.5 <= alpha <= 1.0:
        raise ValueError(f"need mu >= 1 and alpha in [1/2, 1], got mu={mu}, alpha={alpha}")
    if variable not in ("h", "N"):
        raise ValueError(f"variable must be 'h' or 'N', got {variable!r}")
    bt, bh = _betas(beta)
    k_hat = _is_int(bh - 2 * s) or _is_int(bh)
    k_tilde = _is_int(bt - 2 * s) or _is_int(bt)
    terms = [(mu * s, False), ((bh - 2 * s) * alpha, k_hat), (bt - 2 * s * alpha, k_tilde)]
    rate = min(t for t, _ in terms)
    log_flag = any(lf for t, lf in terms if abs(t - rate) < 1e-12)
    if variable == "h":
        return rate, log_flag
    if n == 1:
        return -rate, log_flag
    crit = n / (n - 1)
    if abs(mu - crit) < 1e-12:
        return -rate / n, True
    if mu < crit:
        return -rate / n, log_flag
    return -rate / ((n - 1) * mu), log_flag


def fit_rate(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(x)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 (x, error) pairs, got {len(pairs)}")
    x, e = np.asarray(pairs, dtype=float).T
    if np.any(x <= 0) or np.any(e <= 0):
        raise ValueError("x and error values must be positive")
    return float(np.polyfit(np.log(x), np.log(e), 1)[0])


# -- studies -------------------------------------------------------------------


@dataclass(frozen=True)
class SchemeConfig:
    s: float
    dimension: int = 1
    h_values: tuple = ()
    mode: str = "custom"
    alpha: float = 1.0
    mu: float = 1.0
    delta0: Optional[float] = None
    beta: float = math.inf
    fit_levels: int = 4
    cell_samples: bool = False

    def __post_init__(self):
        object.__setattr__(self, "h_values", tuple(float(h) for h in self.h_values))
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s={self.s} outside (0, 1)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.5 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} outside [1/2, 1]")
        if self.mu < 1.0:
            raise ValueError(f"mu={self.mu} must be >= 1")
        if self.delta0 is not None and not self.delta0 > 0:
            raise ValueError(f"delta0={self.delta0} must be positive")
        if any(not h > 0 for h in self.h_values):
            raise ValueError("refinement values must be positive")
        if self.fit_levels < 3:
            raise ValueError("fit_levels must be at least 3")

    def resolved(self) -> "SchemeConfig":
        """Copy with (alpha, mu) fixed by the mode."""
        if self.mode == "huang_oberman":
            return replace(self, alpha=1.0, mu=1.0)
        if self.mode == "optimal":
            return replace(self, alpha=optimal_alpha(self.beta), mu=optimal_mu(self.dimension, self.s, self.beta))
        return self

    @property
    def rate_variable(self) -> str:
        return "h" if self.dimension == 1 else "N"

    def build_mesh(self, h: float) -> Mesh:
        if self.dimension == 1:
            return build_interval_mesh(-1.0, 1.0, h, self.mu)
        return build_disk_mesh(1.0, h, self.mu)


@dataclass
class RunRecord:
    h: float
    N: int
    mu: float
    alpha: float
    s: float
    linf_error: float
    cell_error: Optional[float] = None
    n_vertices: int = 0
    min_row_sum: float = 0.0
    min_inverse_entry: float = 0.0
    monotone: bool = True


@dataclass
class ConvergenceReport:
    dimension: int
    variable: str
    runs: list[RunRecord]
    fitted_rate: float
    expected_rate: float
    log_factor_flag: bool
    beta_tilde: float
    beta_hat: float
    fit_levels: int = 4

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("beta_tilde", "beta_hat"):
            d[k] = float(d[k])
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.runs:
            w.writerow([repr(r.h), r.N, repr(r.mu), repr(r.alpha), repr(r.s), repr(r.linf_error),
                        repr(self.fitted_rate), repr(self.expected_rate)])
        return buf.getvalue()

    def write(self, json_path: Union[str, Path], csv_path: Union[str, Path]) -> None:
        Path(json_path).write_text(self.to_json(), encoding="utf-8")
        Path(csv_path).write_text(self.to_csv(), encoding="utf-8")


def run_level(cfg: SchemeConfig, h: float) -> RunRecord:
    """Build, classify, assemble, check, solve and measure one refinement level."""
    cfg = cfg.resolved()
    mesh = cfg.build_mesh(h)
    cls = classify_nodes(mesh, cfg.alpha, cfg.delta0)
    A = assemble(mesh, cls, cfg.s)
    rep = verify_monotone(A)
    if not rep.ok:
        raise StudyAborted(h, rep.summary())
    f = np.ones(A.size)
    sol = solve_direct(A, f, mesh=mesh)
    exact = lambda x: exact_solution_ball(cfg.dimension, cfg.s, x)
    cell_err = None
    if cfg.cell_samples:
        err, cell_err = nodal_error(sol, exact, samples=True)
    else:
        err = nodal_error(sol, exact)
    log.info("h=%g N=%d error=%.6e", h, A.size, err)
    return RunRecord(float(h), int(A.size), cfg.mu, cfg.alpha, cfg.s, err, cell_err,
                     mesh.n_vertices, rep.min_row_sum, rep.min_inverse_entry, rep.ok)


def _run_level_args(args):
    return run_level(*args)


def run_convergence_study(config: SchemeConfig, jobs: int = 1) -> ConvergenceReport:
    """Run every refinement level (optionally in a process pool) and fit the rate."""
    cfg = config.resolved()
    hs = sorted(set(cfg.h_values), reverse=True)
    if len(hs) < 3:
        raise ValueError("a study needs at least 3 distinct refinement values")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_run_level_args, [(cfg, h) for h in hs]))
    else:
        runs = [run_level(cfg, h) for h in hs]
    runs.sort(key=lambda r: -r.h)
    tail = runs[-min(cfg.fit_levels, len(runs)):]
    if cfg.rate_variable == "h":
        fitted = fit_rate([(r.h, r.linf_error) for r in tail])
    else:
        fitted = fit_rate([(r.N, r.linf_error) for r in tail])
    rate, flag = expected_rate(cfg.dimension, cfg.s, cfg.mu, cfg.alpha, cfg.beta, cfg.rate_variable)
    bt, bh = _betas(cfg.beta)
    return ConvergenceReport(cfg.dimension, cfg.rate_variable, runs, fitted, rate, flag, bt, bh,
                             cfg.fit_levels)
