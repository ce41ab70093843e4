"""Kernel moments of affine functions over intervals and convex polygons.

1D moments use closed-form primitives of r^{-1-2s} and r^{-2s}, written with
expm1/log1p (and a short series for very short intervals) so that hat-function
weights stay accurate and nonnegative even when the cell is tiny compared to
its distance from the centre.

2D moments use Green's second identity with F = C/(4s^2) |y - c|^{-2s}:

    C int_P phi |y-c|^{-2-2s} dy = int_dP phi dF/dn - F dphi/dn ds,

with every edge integral done by composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence, Union

import numpy as np

from . import _kernels
from .constants import c_ns

Affine = Union[Sequence[float], Callable]

_SERIES_CUTOFF = 0.05
_SERIES_TERMS = 16


def _as_affine(phi: Affine, dim: int, probe: np.ndarray) -> np.ndarray:
    """Coefficients (a, b_1, .., b_dim) of phi(y) = a + b . y.

    Callables are probed at ``probe`` points (dim + 2 of them) and must be
    affine up to round-off.
    """
    if callable(phi):
        pts = np.asarray(probe, dtype=float).reshape(-1, dim)
        vals = np.array([float(phi(p if dim > 1 else p[0])) for p in pts])
        M = np.column_stack([np.ones(len(pts)), pts])
        coef, *_ = np.linalg.lstsq(M, vals, rcond=None)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.max(np.abs(M @ coef - vals)) > 1e-10 * scale:
            raise ValueError("phi is not an affine function")
        return coef
    coef = np.asarray(phi, dtype=float).reshape(-1)
    if coef.shape != (dim + 1,):
        raise ValueError(f"affine phi needs {dim + 1} coefficients, got {coef.shape[0]}")
    return coef


# -- 1D ----------------------------------------------------------------------


def _series_g(U, s):
    """int_0^U u (1+u)^{-1-2s} du for small U (power series)."""
    out = np.zeros_like(U)
    c = np.ones_like(U)
    Upow = U * U
    for m in range(_SERIES_TERMS):
        out += c * Upow / (m + 2)
        c = c * (-(2.0 * s + 1.0 + m)) / (m + 1)
        Upow = Upow * U
    return out


def radial_moments(r_a, r_b, s):
    """Moments of r^{-1-2s} on [r_a, r_b], 0 < r_a < r_b.

    Returns ``(M0, G, Gt)`` with M0 = int K, G = int (r - r_a) K and
    Gt = int (r_b - r) K, all computed without subtractive cancellation.
    """
    r_a = np.asarray(r_a, dtype=float)
    r_b = np.asarray(r_b, dtype=float)
    ell = r_b - r_a
    U = ell / r_a
    lg = np.log1p(U)
    M0 = r_a ** (-2.0 * s) * (-np.expm1(-2.0 * s * lg)) / (2.0 * s)
    e = 1.0 - 2.0 * s
    with np.errstate(invalid="ignore", divide="ignore"):
        E1 = lg if e == 0.0 else np.expm1(e * lg) / e
        E0 = -np.expm1(-2.0 * s * lg) / (2.0 * s)
        g = np.where(U < _SERIES_CUTOFF, _series_g(np.minimum(U, _SERIES_CUTOFF), s), E1 - E0)
    G = r_a ** e * g
    Gt = ell * M0 - G
    return M0, G, Gt


def interval_kernel_moment(p: float, q: float, x_center: float, s: float, phi: Affine) -> float:
    """C_{1,s} * int_p^q phi(y) |y - x_center|^{-1-2s} dy for affine phi."""
    if not p < q:
        raise ValueError(f"empty interval [{p}, {q}]")
    if p <= x_center <= q:
        raise ValueError(f"centre {x_center} lies in the closed interval [{p}, {q}]")
    a, b = _as_affine(phi, 1, np.array([p, q, 0.5 * (p + q), p + 0.25 * (q - p)]))
    if x_center <= p:
        r_a, r_b = p - x_center, q - x_center
        val_a, slope = a + b * p, b
    else:
        r_a, r_b = x_center - q, x_center - p
        val_a, slope = a + b * q, -b
    M0, G, _ = radial_moments(r_a, r_b, s)
    return c_ns(1, s) * float(val_a * M0 + slope * G)


def interval_tail_weights(nodes_lo, nodes_hi, x, H, s):
    """Hat weights of one node's 1D tail over cells [lo, hi] (vectorised).

    Returns ``(w_lo, w_hi)``: the unnormalised integrals of the left and
    right hat functions of each cell times |y - x|^{-1-2s} over the part of
    the cell outside (x - H, x + H).
    """
    lo = np.asarray(nodes_lo, dtype=float)
    hi = np.asarray(nodes_hi, dtype=float)
    ell = hi - lo
    w_lo = np.zeros_like(lo)
    w_hi = np.zeros_like(lo)

    a = np.maximum(lo, x + H)
    right = hi > a
    if np.any(right):
        ra = a[right] - x
        rb = hi[right] - x
        M0, G, Gt = radial_moments(ra, rb, s)
        L = ell[right]
        # right hat increases with r; left hat decreases and vanishes at hi
        w_hi[right] += (M0 * (a[right] - lo[right]) + G) / L
        w_lo[right] += Gt / L

    b = np.minimum(hi, x - H)
    left = b > lo
    if np.any(left):
        ra = x - b[left]
        rb = x - lo[left]
        M0, G, Gt = radial_moments(ra, rb, s)
        L = ell[left]
        w_lo[left] += (M0 * (hi[left] - b[left]) + G) / L
        w_hi[left] += Gt / L
    return w_lo, w_hi


# -- 2D ----------------------------------------------------------------------


def _ccw(poly: np.ndarray) -> np.ndarray:
    poly = np.ascontiguousarray(poly, dtype=float).reshape(-1, 2)
    if _kernels._poly_area(poly, len(poly)) < 0:
        poly = poly[::-1].copy()
    return poly


def _inside_or_on_convex(poly: np.ndarray, x: np.ndarray) -> bool:
    d = np.roll(poly, -1, axis=0) - poly
    w = x - poly
    cross = d[:, 0] * w[:, 1] - d[:, 1] * w[:, 0]
    scale = np.abs(d).max() * np.abs(w).max()
    return bool(np.all(cross >= -1e-14 * scale))


def polygon_kernel_moment(P, x_center, s: float, phi: Affine) -> float:
    """C_{2,s} * int_P phi(y) |y - x_center|^{-2-2s} dy for convex P, affine phi."""
    poly = _ccw(P)
    if len(poly) < 3:
        raise ValueError("polygon needs at least three vertices")
    x = np.asarray(x_center, dtype=float).reshape(2)
    if _inside_or_on_convex(poly, x):
        raise ValueError(f"centre {tuple(x)} lies inside or on the polygon")
    coef = _as_affine(phi, 2, np.vstack([poly[:3], poly.mean(axis=0), [poly[0] + 0.3 * (poly[1] - poly[0])]]))
    vals = (coef[0] + poly @ coef[1:]).reshape(1, -1)
    grads = coef[1:].reshape(1, 2).copy()
    out = np.zeros(1)
    _kernels.polygon_moments(poly, len(poly), x[0], x[1], s, vals, grads, out)
    return c_ns(2, s) / (4.0 * s * s) * float(out[0])


def clip_triangle_minus_square(tri, square) -> list[np.ndarray]:
    """Convex pieces covering ``tri`` minus the open axis-aligned square.

    ``square`` is ``(cx, cy, half_side)``.
    """
    t = _ccw(tri)
    if t.shape != (3, 2):
        raise ValueError("triangle needs exactly three vertices")
    area = abs(_kernels._poly_area(t, 3))
    scale = np.abs(t - t.mean(axis=0)).max()
    if not area > 1e-14 * scale * scale:
        raise ValueError("degenerate (zero-area) triangle")
    cx, cy, a = (float(v) for v in square)
    if not a > 0:
        raise ValueError("square half-side must be positive")
    pieces = np.empty((4, _kernels.MAX_POLY, 2))
    counts = np.zeros(4, dtype=np.int64)
    n = _kernels.clip_minus_square(t, cx - a, cx + a, cy - a, cy + a, pieces, counts)
    return [pieces[k, :counts[k]].copy() for k in range(n)]


def polygon_area(P) -> float:
    P = np.asarray(P, dtype=float)
    return abs(float(_kernels._poly_area(np.ascontiguousarray(P), len(P))))
