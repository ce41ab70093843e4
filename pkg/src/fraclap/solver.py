"""Direct and stationary solvers for the assembled M-matrix systems."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import linalg

from .mesh import Mesh
from .operator.assembly import OperatorMatrix

log = logging.getLogger(__name__)

DIRECT_RTOL = 1e-10


class SolverError(RuntimeError):
    """Singular system or failed convergence; ``residual`` holds the last max-norm residual."""

    def __init__(self, msg: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    nodal_values: np.ndarray
    residual_norm: float
    solver_tag: str
    iterations: int = 0
    mesh: Optional[Mesh] = None
    interior_ids: Optional[np.ndarray] = None

    def full_values(self) -> np.ndarray:
        """Values on every mesh vertex (zero on the boundary)."""
        if self.mesh is None or self.interior_ids is None:
            raise ValueError("solution is not attached to a mesh")
        u = np.zeros(self.mesh.n_vertices)
        u[self.interior_ids] = self.nodal_values
        return u

    def to_records(self) -> list[dict]:
        u = self.full_values()
        keys = ("x", "y")
        out = []
        for k, (p, val) in enumerate(zip(self.mesh.vertices, u)):
            rec = {"vertex_index": k}
            rec.update({keys[d]: float(p[d]) for d in range(self.mesh.dimension)})
            rec["value"] = float(val)
            out.append(rec)
        return out

    def dump_json(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_records(), indent=1) + "\n", encoding="utf-8")


def _unpack(A):
    if isinstance(A, OperatorMatrix):
        return A.entries, A
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    return M, None


def _attach(op, mesh):
    if op is None or mesh is None:
        return {}
    return {"mesh": mesh, "interior_ids": op.interior_ids}


def solve_direct(A, f, mesh: Optional[Mesh] = None) -> DiscreteSolution:
    """Dense LU with partial pivoting (factorisation cached on OperatorMatrix)."""
    M, op = _unpack(A)
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != M.shape[0]:
        raise ValueError(f"rhs length {f.shape[0]} does not match matrix size {M.shape[0]}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            lu = op.lu_factor() if op is not None else linalg.lu_factor(M, check_finite=False)
    except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as exc:
        raise SolverError(f"factorisation failed: {exc}") from exc
    if M.shape[0] and np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise SolverError("matrix is numerically singular")
    u = linalg.lu_solve(lu, f, check_finite=False)
    res = float(np.max(np.abs(M @ u - f))) if len(f) else 0.0
    if not np.all(np.isfinite(u)):
        raise SolverError("matrix is numerically singular", res)
    bound = DIRECT_RTOL * (np.max(np.sum(np.abs(M), axis=1)) * np.max(np.abs(u)) + np.max(np.abs(f))) if len(f) else 0.0
    if res > bound:
        raise SolverError(f"direct solve residual {res:.3e} exceeds {bound:.3e}", res)
    return DiscreteSolution(u, res, "direct", 0, **_attach(op, mesh))


def solve_iterative(A, f, tol: float = 1e-10, max_iter: int = 10_000, method: str = "gauss-seidel",
                    omega: float = 2.0 / 3.0, mesh: Optional[Mesh] = None) -> DiscreteSolution:
    """Stationary sweeps from a zero start until ||A u - f||_inf <= tol ||f||_inf.

    ``method`` is "gauss-seidel" (default) or "jacobi" (damped by ``omega``).
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    M, op = _unpack(A)
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != M.shape[0]:
        raise ValueError(f"rhs length {f.shape[0]} does not match matrix size {M.shape[0]}")
    if method not in ("gauss-seidel", "jacobi"):
        raise ValueError(f"unknown method {method!r}")
    fnorm = float(np.max(np.abs(f))) if len(f) else 0.0
    u = np.zeros_like(f)
    res = fnorm
    target = tol * fnorm
    if method == "gauss-seidel":
        lower = np.tril(M)
        upper = M - lower
    else:
        d = np.diag(M).copy()
    it = 0
    while res > target:
        if it >= max_iter:
            raise SolverError(f"{method} did not converge in {max_iter} sweeps "
                              f"(residual {res:.3e}, target {target:.3e})", res, it)
        if method == "gauss-seidel":
            u = linalg.solve_triangular(lower, f - upper @ u, lower=True, check_finite=False)
        else:
            u = u + omega * (f - M @ u) / d
        it += 1
        res = float(np.max(np.abs(M @ u - f)))
        log.debug("%s sweep %d residual %.3e", method, it, res)
    tag = f"iterative({it})"
    return DiscreteSolution(u, res, tag, it, **_attach(op, mesh))
