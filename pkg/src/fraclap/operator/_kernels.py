"""Compiled inner loops for the 2D tail weights.

Everything here works on plain float arrays so the same routines serve the
public single-polygon helpers and the O(N^2) row assembly.

Edge integrals use F = r^{-2s} (unscaled); callers multiply by
C_{2,s} / (4 s^2) so that Laplacian(F) matches the kernel.
"""

import math
import os

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba and only produces a warning
if "NUMBA_THREADING_LAYER" not in os.environ:
    config.THREADING_LAYER = "omp"

GL_POINTS = 16
_x, _w = np.polynomial.legendre.leggauss(GL_POINTS)
GL_T = 0.5 * (_x + 1.0)
GL_W = 0.5 * _w
MAX_PANELS = 64
EDGE_RTOL = 1e-11
MAX_POLY = 12


@njit(cache=True, fastmath=False)
def _edge_panels(px, py, qx, qy, cx, cy, s, npan):
    """Composite GL over npan equal panels of the segment P -> Q.

    Returns (int F ds, int dF/dn ds, int t dF/dn ds) with t in [0, 1] the
    segment parameter and n the right-hand (outward for CCW) normal.
    """
    dx = qx - px
    dy = qy - py
    ell = math.sqrt(dx * dx + dy * dy)
    nx = dy / ell
    ny = -dx / ell
    dn = (px - cx) * nx + (py - cy) * ny
    IF = 0.0
    J0 = 0.0
    J1 = 0.0
    hp = 1.0 / npan
    for p in range(npan):
        t0 = p * hp
        for k in range(GL_POINTS):
            t = t0 + hp * GL_T[k]
            w = hp * GL_W[k] * ell
            yx = px + t * dx - cx
            yy = py + t * dy - cy
            r2 = yx * yx + yy * yy
            f = r2 ** (-s)
            g = -2.0 * s * f / r2 * dn
            IF += w * f
            J0 += w * g
            J1 += w * t * g
    return IF, J0, J1


@njit(cache=True)
def _segment_dist(px, py, qx, qy, cx, cy):
    dx = qx - px
    dy = qy - py
    L2 = dx * dx + dy * dy
    t = ((cx - px) * dx + (cy - py) * dy) / L2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px + t * dx - cx
    ey = py + t * dy - cy
    return math.sqrt(ex * ex + ey * ey)


@njit(cache=True)
def _close(a, b):
    return abs(a - b) <= EDGE_RTOL * abs(b) + 1e-300


@njit(cache=True)
def edge_integrals(px, py, qx, qy, cx, cy, s):
    """Adaptive (dyadic) composite 16-point GL edge integrals.

    Edges at least one edge-length away from the centre are resolved to
    round-off by a single panel and skip the refinement loop.
    """
    dx = qx - px
    dy = qy - py
    ell = math.sqrt(dx * dx + dy * dy)
    if _segment_dist(px, py, qx, qy, cx, cy) >= ell:
        return _edge_panels(px, py, qx, qy, cx, cy, s, 1)
    a0, a1, a2 = _edge_panels(px, py, qx, qy, cx, cy, s, 1)
    npan = 1
    while npan < MAX_PANELS:
        npan *= 2
        b0, b1, b2 = _edge_panels(px, py, qx, qy, cx, cy, s, npan)
        if _close(b0, a0) and _close(b1, a1) and _close(b2, a2):
            return b0, b1, b2
        a0, a1, a2 = b0, b1, b2
    return a0, a1, a2


@njit(cache=True)
def polygon_moments(poly, m, cx, cy, s, phi_vals, phi_grads, out):
    """Accumulate int_P phi_k |y - c|^{-2-2s} dy / (C / (4 s^2)) into out[k].

    ``poly[:m]`` is a counter-clockwise convex polygon, ``phi_vals[k, j]`` the
    value of affine function k at vertex j, ``phi_grads[k]`` its gradient.
    """
    nk = phi_vals.shape[0]
    for j in range(m):
        j1 = (j + 1) % m
        px, py = poly[j, 0], poly[j, 1]
        qx, qy = poly[j1, 0], poly[j1, 1]
        dx = qx - px
        dy = qy - py
        ell = math.sqrt(dx * dx + dy * dy)
        if ell == 0.0:
            continue
        nx = dy / ell
        ny = -dx / ell
        IF, J0, J1 = edge_integrals(px, py, qx, qy, cx, cy, s)
        for k in range(nk):
            dphin = phi_grads[k, 0] * nx + phi_grads[k, 1] * ny
            out[k] += phi_vals[k, j] * (J0 - J1) + phi_vals[k, j1] * J1 - dphin * IF


@njit(cache=True)
def _clip_half(src, n, axis, bound, sign, dst):
    """Keep the part of polygon src[:n] where sign * (p[axis] - bound) >= 0."""
    m = 0
    for k in range(n):
        k1 = (k + 1) % n
        dc = sign * (src[k, axis] - bound)
        dn = sign * (src[k1, axis] - bound)
        if dc >= 0.0:
            dst[m, 0] = src[k, 0]
            dst[m, 1] = src[k, 1]
            m += 1
        if (dc > 0.0 and dn < 0.0) or (dc < 0.0 and dn > 0.0):
            t = dc / (dc - dn)
            dst[m, 0] = src[k, 0] + t * (src[k1, 0] - src[k, 0])
            dst[m, 1] = src[k, 1] + t * (src[k1, 1] - src[k, 1])
            dst[m, axis] = bound
            m += 1
    return m


@njit(cache=True)
def _poly_area(p, n):
    a = 0.0
    for k in range(n):
        k1 = (k + 1) % n
        a += p[k, 0] * p[k1, 1] - p[k1, 0] * p[k, 1]
    return 0.5 * a


@njit(cache=True)
def clip_minus_square(tri, x0, x1, y0, y1, pieces, counts):
    """Split triangle minus the open box [x0,x1]x[y0,y1] into convex pieces.

    The complement of the box is partitioned into a left slab, right slab,
    bottom-middle and top-middle region; the triangle is clipped against
    each. Returns the number of non-degenerate pieces written.
    """
    tri_area = abs(_poly_area(tri, 3))
    buf_a = np.empty((MAX_POLY, 2))
    buf_b = np.empty((MAX_POLY, 2))
    npieces = 0
    for region in range(4):
        for k in range(3):
            buf_a[k, 0] = tri[k, 0]
            buf_a[k, 1] = tri[k, 1]
        n = 3
        if region == 0:
            n = _clip_half(buf_a, n, 0, x0, -1.0, buf_b)
            src = buf_b
        elif region == 1:
            n = _clip_half(buf_a, n, 0, x1, 1.0, buf_b)
            src = buf_b
        else:
            n = _clip_half(buf_a, n, 0, x0, 1.0, buf_b)
            if n >= 3:
                n = _clip_half(buf_b, n, 0, x1, -1.0, buf_a)
            if n >= 3:
                if region == 2:
                    n = _clip_half(buf_a, n, 1, y0, -1.0, buf_b)
                else:
                    n = _clip_half(buf_a, n, 1, y1, 1.0, buf_b)
            src = buf_b
        if n < 3:
            continue
        if _poly_area(src, n) <= 1e-14 * tri_area:
            continue
        for k in range(n):
            pieces[npieces, k, 0] = src[k, 0]
            pieces[npieces, k, 1] = src[k, 1]
        counts[npieces] = n
        npieces += 1
    return npieces


@njit(cache=True)
def _hat_value(verts, tris, grads, t, y, j_local):
    """Hat function j_local of triangle t evaluated at point y."""
    v = tris[t, j_local]
    return 1.0 + grads[t, j_local, 0] * (y[0] - verts[v, 0]) + grads[t, j_local, 1] * (y[1] - verts[v, 1])


@njit(parallel=True, cache=True)
def tail_weights_2d(verts, tris, edges, cell_edges, grads, bmin, bmax,
                    centers, half, s, col_map, out):
    """Tail weights w_ij (without the C/(4s^2) factor) for a batch of rows.

    Row r uses centre ``centers[r]`` and the square of half-side ``half[r]``.
    Contributions of vertex j land in ``out[r, col_map[j]]``; vertices with
    col_map -1 are skipped.
    """
    nrows = centers.shape[0]
    nt = tris.shape[0]
    ne = edges.shape[0]
    for r in prange(nrows):
        cx = centers[r, 0]
        cy = centers[r, 1]
        a = half[r]
        x0 = cx - a
        x1 = cx + a
        y0 = cy - a
        y1 = cy + a
        done = np.zeros(ne, dtype=np.bool_)
        cIF = np.empty(ne)
        cJ0 = np.empty(ne)
        cJ1 = np.empty(ne)
        pieces = np.empty((4, MAX_POLY, 2))
        counts = np.zeros(4, dtype=np.int64)
        tri = np.empty((3, 2))
        pvals = np.empty((3, MAX_POLY))
        pgrads = np.empty((3, 2))
        acc = np.empty(3)
        for t in range(nt):
            outside = (bmax[t, 0] <= x0 or bmin[t, 0] >= x1
                       or bmax[t, 1] <= y0 or bmin[t, 1] >= y1)
            if outside:
                for k in range(3):
                    code = cell_edges[t, k]
                    e = abs(code) - 1
                    if not done[e]:
                        ea = edges[e, 0]
                        eb = edges[e, 1]
                        i0, i1, i2 = edge_integrals(verts[ea, 0], verts[ea, 1],
                                                    verts[eb, 0], verts[eb, 1], cx, cy, s)
                        cIF[e] = i0
                        cJ0[e] = i1
                        cJ1[e] = i2
                        done[e] = True
                    IF = cIF[e]
                    if code > 0:
                        J0 = cJ0[e]
                        J1 = cJ1[e]
                    else:
                        # reversed traversal flips the normal and t -> 1 - t
                        J0 = -cJ0[e]
                        J1 = -(cJ0[e] - cJ1[e])
                    va = tris[t, k]
                    vb = tris[t, (k + 1) % 3]
                    dx = verts[vb, 0] - verts[va, 0]
                    dy = verts[vb, 1] - verts[va, 1]
                    ell = math.sqrt(dx * dx + dy * dy)
                    nx = dy / ell
                    ny = -dx / ell
                    ka = k
                    kb = (k + 1) % 3
                    for j in range(3):
                        col = col_map[tris[t, j]]
                        if col < 0:
                            continue
                        dphin = grads[t, j, 0] * nx + grads[t, j, 1] * ny
                        val = -dphin * IF
                        if j == ka:
                            val += J0 - J1
                        elif j == kb:
                            val += J1
                        out[r, col] += val
                continue
            inside = True
            for k in range(3):
                v = tris[t, k]
                if not (x0 <= verts[v, 0] <= x1 and y0 <= verts[v, 1] <= y1):
                    inside = False
            if inside:
                continue
            for k in range(3):
                tri[k, 0] = verts[tris[t, k], 0]
                tri[k, 1] = verts[tris[t, k], 1]
            np_ = clip_minus_square(tri, x0, x1, y0, y1, pieces, counts)
            for j in range(3):
                pgrads[j, 0] = grads[t, j, 0]
                pgrads[j, 1] = grads[t, j, 1]
            for p in range(np_):
                m = counts[p]
                for j in range(3):
                    for q in range(m):
                        pvals[j, q] = _hat_value(verts, tris, grads, t, pieces[p, q], j)
                acc[:] = 0.0
                polygon_moments(pieces[p], m, cx, cy, s, pvals, pgrads, acc)
                for j in range(3):
                    col = col_map[tris[t, j]]
                    if col >= 0:
                        out[r, col] += acc[j]
