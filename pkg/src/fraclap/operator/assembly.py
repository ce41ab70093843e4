"""Dense assembly of the monotone two-scale operator and its sign checks.

Row i of the matrix is C_{n,s} times

    -kappa * Delta_FD u(x_i; H_i) / H_i^{2s}  +  int_{Omega_i^c} (u(x_i) - u(y)) |x_i - y|^{-n-2s} dy

restricted to interior columns (u vanishes on boundary vertices and outside
the domain). Off-grid stencil points are evaluated by barycentric
interpolation in the containing cell.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import linalg

from ..mesh import Mesh, NodeClassification, locate_points
from . import _kernels
from .constants import c_ns, kappa_constant, tail_kernel_mass
from .moments import interval_tail_weights

log = logging.getLogger(__name__)

MATRIX_HEADER = "fraclap-matrix v1"


class AssemblyError(RuntimeError):
    """An assembled row violates the monotone sign structure."""


@dataclass(eq=False)
class OperatorMatrix:
    """Dense N0 x N0 operator over interior nodes plus per-row metadata."""

    entries: np.ndarray
    s: float
    n: int
    c_ns: float
    kappa: np.ndarray
    big_scale: np.ndarray
    tail_mass: np.ndarray
    interior_ids: np.ndarray
    _lu: Optional[tuple] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def lu_factor(self):
        if self._lu is None:
            self._lu = linalg.lu_factor(self.entries, check_finite=False)
        return self._lu

    @property
    def interior_node_ids(self) -> np.ndarray:
        return self.interior_ids

    @property
    def row_meta(self) -> list[dict]:
        return [self.row_info(r) for r in range(self.size)]

    def row_info(self, row: int) -> dict:
        return {"row": row, "vertex": int(self.interior_ids[row]), "kappa": float(self.kappa[row]),
                "H": float(self.big_scale[row]), "tail_mass": float(self.tail_mass[row])}


# -- singular part -------------------------------------------------------------


def _stencil_points(mesh: Mesh, cls: NodeClassification) -> np.ndarray:
    """Points x_i +/- H_i e_j, shape (N0, 2n, n)."""
    n = mesh.dimension
    x = mesh.vertices[cls.vertex_ids]
    H = cls.big_scale
    pts = np.empty((len(H), 2 * n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        pts[:, 2 * j] = x + H[:, None] * e
        pts[:, 2 * j + 1] = x - H[:, None] * e
    return pts


def _row_of(cls: NodeClassification, i: int) -> int:
    hit = np.flatnonzero(cls.vertex_ids == i)
    if len(hit) == 0:
        raise ValueError(f"vertex {i} is not an interior node")
    return int(hit[0])


def singular_stencil_row(mesh: Mesh, cls: NodeClassification, i: int, s: float) -> dict[int, float]:
    """Coefficients {vertex: weight} of -kappa Delta_FD u(x_i; H_i) / H_i^{2s}.

    ``i`` is the mesh vertex of an interior node. The C_{n,s} factor is not
    included.
    """
    row = _row_of(cls, i)
    n = mesh.dimension
    H = float(cls.big_scale[row])
    k = kappa_constant(n, s) / H ** (2 * s)
    pts = _stencil_points(mesh, cls)[row]
    cells, bary = locate_points(mesh, pts)
    coeffs: dict[int, float] = {i: 2 * n * k}
    for c, lam in zip(cells, bary):
        for v, b in zip(mesh.cells[c], lam):
            if b != 0.0:
                coeffs[int(v)] = coeffs.get(int(v), 0.0) - k * b
    return coeffs


# -- tail part -----------------------------------------------------------------


def _tail_weights_1d(mesh: Mesh, centers, H, s, col_map, ncols):
    v = mesh.vertices[:, 0]
    c = mesh.cells
    swap = v[c[:, 0]] > v[c[:, 1]]
    lo_id = np.where(swap, c[:, 1], c[:, 0])
    hi_id = np.where(swap, c[:, 0], c[:, 1])
    lo, hi = v[lo_id], v[hi_id]
    lo_col, hi_col = col_map[lo_id], col_map[hi_id]
    keep_lo, keep_hi = lo_col >= 0, hi_col >= 0
    out = np.zeros((len(centers), ncols))
    for r, (x, Hr) in enumerate(zip(centers, H)):
        w_lo, w_hi = interval_tail_weights(lo, hi, x, Hr, s)
        out[r] = (np.bincount(lo_col[keep_lo], w_lo[keep_lo], minlength=ncols)
                  + np.bincount(hi_col[keep_hi], w_hi[keep_hi], minlength=ncols))
    return out


def _mesh_arrays_2d(mesh: Mesh):
    v = np.ascontiguousarray(mesh.vertices)
    tris = np.ascontiguousarray(mesh.cells)
    edges, cell_edges = mesh.edges
    tri = v[tris]
    # hat gradients: grad(lambda_k) = rot(opposite edge) / (2 area)
    area2 = 2.0 * mesh.signed_areas
    grads = np.empty((len(tris), 3, 2))
    for k in range(3):
        p, q = tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        grads[:, k, 0] = -(q[:, 1] - p[:, 1]) / area2
        grads[:, k, 1] = (q[:, 0] - p[:, 0]) / area2
    return (v, tris, np.ascontiguousarray(edges), np.ascontiguousarray(cell_edges),
            grads, np.ascontiguousarray(tri.min(axis=1)), np.ascontiguousarray(tri.max(axis=1)))


def tail_weight_block(mesh: Mesh, centers, H, s: float, col_map=None, ncols=None,
                      out: Optional[np.ndarray] = None) -> np.ndarray:
    """C_{n,s}-scaled hat weights w_ij for rows with centres/scales (centers, H).

    Column of vertex j is ``col_map[j]`` (identity by default; -1 drops it).
    """
    if col_map is None:
        col_map = np.arange(mesh.n_vertices)
        ncols = mesh.n_vertices
    col_map = np.ascontiguousarray(col_map, dtype=np.int64)
    H = np.asarray(H, dtype=float)
    n = mesh.dimension
    if n == 1:
        centers = np.asarray(centers, dtype=float).reshape(-1)
        w = _tail_weights_1d(mesh, centers, H, s, col_map, ncols)
        w *= c_ns(1, s)
        if out is not None:
            out[...] = w
            return out
        return w
    centers = np.ascontiguousarray(np.asarray(centers, dtype=float).reshape(-1, 2))
    if out is None:
        out = np.zeros((len(centers), ncols))
    else:
        out[...] = 0.0
    _kernels.tail_weights_2d(*_mesh_arrays_2d(mesh), centers,
                             np.ascontiguousarray(H / math.sqrt(2.0)), float(s), col_map, out)
    out *= c_ns(2, s) / (4.0 * s * s)
    return out


def tail_row(mesh: Mesh, cls: NodeClassification, i: int, s: float) -> tuple[float, dict[int, float]]:
    """(tail_mass, {vertex: w_ij}) for interior vertex ``i``, both C-scaled.

    The tail part at x_i equals tail_mass * u(x_i) - sum_j w_ij u(x_j).
    """
    row = _row_of(cls, i)
    H = float(cls.big_scale[row])
    mass = c_ns(mesh.dimension, s) * tail_kernel_mass(mesh.dimension, s, H)
    w = tail_weight_block(mesh, mesh.vertices[i][None], [H], s)[0]
    return mass, {int(j): float(w[j]) for j in np.flatnonzero(w)}


# -- assembly ------------------------------------------------------------------


def assemble(mesh: Mesh, cls: NodeClassification, s: float, check: bool = True) -> OperatorMatrix:
    """Dense operator over interior nodes (homogeneous exterior Dirichlet data)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} outside (0, 1)")
    n = mesh.dimension
    ids = cls.vertex_ids
    N0 = len(ids)
    C = c_ns(n, s)
    kappa = kappa_constant(n, s)
    H = cls.big_scale
    col_map = np.full(mesh.n_vertices, -1, dtype=np.int64)
    col_map[ids] = np.arange(N0)

    log.debug("assembling %dD operator, N0=%d, s=%g", n, N0, s)
    A = np.zeros((N0, N0))
    tail_weight_block(mesh, mesh.vertices[ids], H, s, col_map, N0, out=A)
    neg = A < 0.0
    if np.any(neg):
        # Green-identity cancellation can leave round-off of either sign on
        # weights that are exactly zero or tiny; anything larger is a bug
        worst = float(A[neg].min())
        tail_mass_min = C * tail_kernel_mass(n, s, float(H.max()))
        if worst < -1e-10 * tail_mass_min:
            r = int(np.argwhere(A == worst)[0, 0])
            raise AssemblyError(f"row {r} (vertex {int(ids[r])}): negative tail weight {worst:.3e}")
        A[neg] = 0.0
    A *= -1.0

    tail_mass = C * np.array([tail_kernel_mass(n, s, h) for h in H])
    sing = C * kappa / H ** (2 * s)
    A[np.arange(N0), np.arange(N0)] += tail_mass + 2 * n * sing

    pts = _stencil_points(mesh, cls).reshape(-1, n)
    cells, bary = locate_points(mesh, pts)
    rows = np.repeat(np.arange(N0), 2 * n)
    verts = mesh.cells[cells]
    for k in range(n + 1):
        cols = col_map[verts[:, k]]
        ok = (cols >= 0) & (bary[:, k] != 0.0)
        np.add.at(A, (rows[ok], cols[ok]), -sing[rows[ok]] * bary[ok, k])

    op = OperatorMatrix(A, float(s), n, C, np.full(N0, kappa), np.array(H, dtype=float),
                        tail_mass, np.array(ids))
    if check:
        _check_rows(op)
    return op


def _max_offdiag(M: np.ndarray, block: int = 512) -> tuple[int, int, float]:
    """Largest off-diagonal entry and its location, scanned in row blocks."""
    N = M.shape[0]
    best = (0, 0, -np.inf)
    for r0 in range(0, N, block):
        B = M[r0:r0 + block].copy()
        k = np.arange(B.shape[0])
        B[k, r0 + k] = -np.inf
        flat = int(np.argmax(B))
        r, c = divmod(flat, N)
        if B[r, c] > best[2]:
            best = (r0 + r, c, float(B[r, c]))
    return best


def _check_rows(op: OperatorMatrix):
    A = op.entries
    d = np.diag(A)
    bad = np.flatnonzero(d <= 0)
    if len(bad):
        r = int(bad[0])
        raise AssemblyError(f"row {r} (vertex {int(op.interior_ids[r])}): non-positive diagonal {d[r]:.3e}")
    if op.size > 1:
        r, c, v = _max_offdiag(A)
        if v > 0:
            raise AssemblyError(f"row {r} (vertex {int(op.interior_ids[r])}): positive off-diagonal "
                                f"{v:.3e} in column {c}")
    rs = A.sum(axis=1)
    bad = np.flatnonzero(rs <= 0)
    if len(bad):
        r = int(bad[0])
        raise AssemblyError(f"row {r} (vertex {int(op.interior_ids[r])}): row sum {rs[r]:.3e} <= 0")


# -- verification --------------------------------------------------------------


@dataclass
class MonotonicityReport:
    z_pattern: bool
    z_violation: Optional[tuple[int, int, float]]
    barrier: bool
    min_row_sum: float
    barrier_violation: Optional[int]
    inverse_positive: bool
    min_inverse_entry: float
    sampled_columns: list[int]

    @property
    def ok(self) -> bool:
        return self.z_pattern and self.barrier and self.inverse_positive

    def summary(self) -> str:
        parts = [
            "Z-pattern " + ("ok" if self.z_pattern else f"FAILED at {self.z_violation}"),
            "barrier " + ("ok" if self.barrier else f"FAILED at row {self.barrier_violation}")
            + f" (min row sum {self.min_row_sum:.3e})",
            "inverse-positivity " + ("ok" if self.inverse_positive else "FAILED")
            + f" (min entry {self.min_inverse_entry:.3e})",
        ]
        return "; ".join(parts)


def verify_monotone(A: Union[OperatorMatrix, np.ndarray], n_samples: int = 5, seed: int = 0,
                    tol: float = 1e-12) -> MonotonicityReport:
    """Check the Z-sign pattern, A @ 1 > 0 and nonnegativity of sampled A^{-1} e_k."""
    M = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A, dtype=float)
    N = M.shape[0]
    r, c, v = _max_offdiag(M) if N > 1 else (0, 0, -np.inf)
    z_ok = bool(v <= 0.0)
    z_bad = None if z_ok else (r, c, v)
    if z_ok:
        z_ok = bool(np.all(np.diag(M) > 0))
        if not z_ok:
            k = int(np.argmin(np.diag(M)))
            z_bad = (k, k, float(M[k, k]))

    rs = M.sum(axis=1)
    b_ok = bool(np.all(rs > 0))
    b_bad = None if b_ok else int(np.argmin(rs))

    rng = np.random.default_rng(seed)
    cols = sorted(int(k) for k in rng.choice(N, size=min(n_samples, N), replace=False))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            lu = A.lu_factor() if isinstance(A, OperatorMatrix) else linalg.lu_factor(M, check_finite=False)
        E = np.zeros((N, len(cols)))
        E[cols, np.arange(len(cols))] = 1.0
        V = linalg.lu_solve(lu, E, check_finite=False)
        vmin = float(V.min())
        inv_ok = bool(np.all(np.isfinite(V)) and vmin >= -tol)
    except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError):
        vmin, inv_ok = float("nan"), False
    return MonotonicityReport(z_ok, z_bad, b_ok, float(rs.min()), b_bad, inv_ok, vmin, cols)


# -- debug dump ----------------------------------------------------------------


def dump_matrix(op: OperatorMatrix, path: Union[str, Path]) -> tuple[Path, Path]:
    """Write the dense matrix as text plus a JSON sidecar of per-row metadata."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{MATRIX_HEADER} n={op.size} s={op.s!r}\n")
        np.savetxt(fh, op.entries, fmt="%.17g")
    meta = path.with_name(path.name + ".json")
    meta.write_text(json.dumps({
        "n": op.size, "s": op.s, "dim": op.n, "c_ns": op.c_ns,
        "rows": op.row_meta,
    }, indent=1), encoding="utf-8")
    return path, meta


def load_matrix(path: Union[str, Path]) -> tuple[np.ndarray, dict]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        head = fh.readline().split()
        if " ".join(head[:2]) != MATRIX_HEADER:
            raise ValueError(f"not a matrix dump: {path}")
        M = np.loadtxt(fh, ndmin=2)
    meta = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    return M, meta
