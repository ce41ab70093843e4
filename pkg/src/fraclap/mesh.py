"""Simplicial grids on intervals and polygonal disks.

Meshes carry the piecewise-linear space on which the discrete operator acts.
Grading follows the usual boundary-layer law: cells touching the boundary
have size ~ h**mu, interior cells ~ h * dist**((mu - 1) / mu), with distances
measured in units of the domain inradius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "NodeClassification",
    "ShapeReport",
    "build_interval_mesh",
    "build_disk_mesh",
    "export_mesh",
    "import_mesh",
    "classify_nodes",
    "compute_shape_constants",
    "locate_point",
    "locate_points",
]

COORD_TOL = 1e-12
MESH_HEADER = "fraclap-mesh v1"


class MeshError(ValueError):
    """Invalid mesh input or corrupt mesh."""


class MeshFormatError(MeshError):
    """Mesh file content does not follow the text format."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable simplicial mesh (intervals in 1D, triangles in 2D).

    ``vertices`` has shape (nv, dim); ``cells`` has shape (nc, dim + 1) with
    counter-clockwise triangles in 2D.
    """

    dimension: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    grading_mu: float = 1.0
    target_h: float = 0.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise MeshError(f"dimension must be 1 or 2, got {self.dimension}")
        v = np.array(self.vertices, dtype=float).reshape(-1, self.dimension)
        c = np.array(self.cells, dtype=np.int64).reshape(-1, self.dimension + 1)
        b = np.array(self.boundary, dtype=bool).reshape(-1)
        object.__setattr__(self, "vertices", _freeze(v))
        object.__setattr__(self, "cells", _freeze(c))
        object.__setattr__(self, "boundary", _freeze(b))
        self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self):
        nv = len(self.vertices)
        if len(self.boundary) != nv:
            raise MeshError("boundary flag count does not match vertex count")
        if len(self.cells) == 0:
            raise MeshError("mesh has no cells")
        if self.cells.min() < 0 or self.cells.max() >= nv:
            bad = int(self.cells.max() if self.cells.max() >= nv else self.cells.min())
            raise MeshError(f"cell references vertex index {bad} of {nv}")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        if self.dimension == 1:
            lengths = self.cell_sizes
            if np.any(lengths <= 0):
                raise MeshError("degenerate interval cell")
            x = self.vertices[:, 0]
            lo, hi = x.min(), x.max()
            # intervals partition [lo, hi]
            if not math.isclose(lengths.sum(), hi - lo, rel_tol=1e-12):
                raise MeshError("interval cells overlap or leave gaps")
            # endpoints are the vertices used by a single cell; graded meshes
            # can put the next node far closer than any coordinate tolerance
            expected = np.bincount(self.cells.ravel(), minlength=nv) == 1
        else:
            area = self.signed_areas
            if np.any(area <= 0):
                t = int(np.argmin(area))
                raise MeshError(f"triangle {t} is inverted or degenerate")
            counts = self._edge_use_counts
            if np.any(counts > 2):
                raise MeshError("an edge is shared by more than two triangles")
            # overlap/fold check: triangle areas must add up to the area
            # enclosed by the boundary edges
            be = self.boundary_edges
            p, q = self.vertices[be[:, 0]], self.vertices[be[:, 1]]
            enclosed = 0.5 * np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])
            if not math.isclose(area.sum(), enclosed, rel_tol=1e-12):
                raise MeshError("triangles overlap or do not cover the domain")
            expected = np.zeros(nv, dtype=bool)
            expected[be.ravel()] = True
        if not np.array_equal(expected, self.boundary):
            k = int(np.flatnonzero(expected != self.boundary)[0])
            raise MeshError(f"boundary flag of vertex {k} disagrees with geometry")

    # -- derived geometry ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def interior_ids(self) -> np.ndarray:
        return _freeze(np.flatnonzero(~self.boundary))

    @cached_property
    def signed_areas(self) -> np.ndarray:
        v = self.vertices
        a, b, c = v[self.cells[:, 0]], v[self.cells[:, 1]], v[self.cells[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                      - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    @cached_property
    def cell_sizes(self) -> np.ndarray:
        """Cell diameters h_T."""
        v = self.vertices
        if self.dimension == 1:
            return np.abs(v[self.cells[:, 1], 0] - v[self.cells[:, 0], 0])
        e = [np.linalg.norm(v[self.cells[:, (k + 1) % 3]] - v[self.cells[:, k]], axis=1)
             for k in range(3)]
        return np.max(e, axis=0)

    @cached_property
    def _directed_edges(self) -> np.ndarray:
        c = self.cells
        return np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]])

    @cached_property
    def _edge_use_counts(self) -> np.ndarray:
        e = np.sort(self._directed_edges, axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return counts

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique 2D edges and, per cell, (edge index, orientation sign).

        Local edge k of a cell runs from local vertex k to vertex k+1. The
        returned ``cell_edges`` array holds ``edge_index`` with sign encoded as
        ``edge_index + 1`` when the cell traverses the edge in its stored
        direction and ``-(edge_index + 1)`` otherwise.
        """
        d = self._directed_edges
        key = np.sort(d, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        same = (d[:, 0] == uniq[inv, 0])
        signed = np.where(same, inv + 1, -(inv + 1))
        nc = self.n_cells
        cell_edges = np.stack([signed[:nc], signed[nc:2 * nc], signed[2 * nc:]], axis=1)
        return _freeze(uniq), _freeze(cell_edges)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Directed (counter-clockwise) boundary edges in 2D."""
        d = self._directed_edges
        key = np.sort(d, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return _freeze(d[counts[inv.reshape(-1)] == 1])

    @cached_property
    def domain_bounds(self) -> tuple[float, float]:
        x = self.vertices[:, 0]
        return float(x.min()), float(x.max())

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        """Distance of every vertex to the (polygonal) domain boundary."""
        if self.dimension == 1:
            lo, hi = self.domain_bounds
            x = self.vertices[:, 0]
            return _freeze(np.minimum(x - lo, hi - x))
        be = self.boundary_edges
        p, q = self.vertices[be[:, 0]], self.vertices[be[:, 1]]
        d = np.empty(self.n_vertices)
        chunk = 2048
        for start in range(0, self.n_vertices, chunk):
            pts = self.vertices[start:start + chunk]
            d[start:start + chunk] = _segment_distance(pts[:, None, :], p[None], q[None]).min(axis=1)
        d[self.boundary] = 0.0
        return _freeze(d)

    @cached_property
    def diameter(self) -> float:
        if self.dimension == 1:
            lo, hi = self.domain_bounds
            return hi - lo
        bv = self.vertices[self.boundary]
        diff = bv[:, None, :] - bv[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    @cached_property
    def inradius(self) -> float:
        return float(self.boundary_distance.max())

    @cached_property
    def _locator(self) -> "_PointLocator":
        return _PointLocator(self)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.grading_mu == other.grading_mu
            and self.target_h == other.target_h
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.boundary, other.boundary)
            and self.vertices.shape == other.vertices.shape
            and bool(np.all(np.abs(self.vertices - other.vertices) <= 1e-15))
        )

    __hash__ = object.__hash__


def _segment_distance(x, p, q):
    """Distance from points ``x`` to segments [p, q] (broadcasting)."""
    d = q - p
    L2 = (d ** 2).sum(-1)
    t = np.clip(((x - p) * d).sum(-1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    proj = p + t[..., None] * d
    return np.sqrt(((x - proj) ** 2).sum(-1))


# -- generators --------------------------------------------------------------


def build_interval_mesh(a: float, b: float, h: float, mu: float = 1.0) -> Mesh:
    """Graded grid on [a, b], symmetric about the midpoint.

    The k-th node from either end sits at distance ``L * (k / K)**mu`` from it,
    with ``L = (b - a) / 2`` and ``K = round(L / h)``.
    """
    if not a < b:
        raise MeshError(f"invalid range: a={a} must be smaller than b={b}")
    if mu < 1:
        raise MeshError(f"grading exponent mu={mu} must be >= 1")
    L = 0.5 * (b - a)
    if not (0 < h <= 0.5 * L * (1 + 1e-12)):
        raise MeshError(f"h={h} too large: need 0 < h <= (b - a)/4 for at least 3 interior nodes")
    K = max(2, int(round(L / h)))
    t = np.arange(K + 1) / K
    dist = L * t ** mu
    left = a + dist
    left[-1] = a + L
    x = np.concatenate([left, (b - dist[:-1])[::-1]])
    n = len(x)
    cells = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    boundary = np.zeros(n, dtype=bool)
    boundary[[0, -1]] = True
    return Mesh(1, x[:, None], cells, boundary, grading_mu=float(mu), target_h=float(h))


def build_disk_mesh(radius: float, h: float, mu: float = 1.0) -> Mesh:
    """Polygonal disk built from concentric vertex rings.

    Ring k lies at distance ``radius * (k / K)**mu`` from the boundary and is
    split into ``max(6, round(2*pi*r_k / h_k))`` segments, where ``h_k`` is the
    graded target size at that distance. Consecutive rings are zipped into
    triangles and the innermost ring is closed by a fan to the center.
    """
    if not radius > 0:
        raise MeshError(f"radius must be positive, got {radius}")
    if mu < 1:
        raise MeshError(f"grading exponent mu={mu} must be >= 1")
    if not (h > 0 and math.isfinite(h)):
        raise MeshError(f"degenerate mesh size h={h}")
    K = int(round(radius / h))
    if K < 2:
        raise MeshError(f"h={h} too large: fewer than 2 rings for radius {radius}")
    R = float(radius)
    rings = []
    for k in range(K):
        d = R * (k / K) ** mu
        r = R - d
        if k == 0:
            hk = R * (h / R) ** mu
        else:
            hk = h * (d / R) ** ((mu - 1) / mu)
        m = max(6, int(round(2 * math.pi * r / hk)))
        # stagger alternate rings by half a segment
        theta = (np.arange(m) + 0.5 * (k % 2)) * (2 * math.pi / m)
        rings.append((r, theta))

    pts = []
    offsets = []
    count = 0
    for r, theta in rings:
        offsets.append(count)
        pts.append(np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1))
        count += len(theta)
    center = count
    pts.append(np.zeros((1, 2)))
    vertices = np.concatenate(pts)
    vertices[: len(rings[0][1])] *= R / np.linalg.norm(vertices[: len(rings[0][1])], axis=1)[:, None]

    tris = []
    for k in range(K - 1):
        tris.extend(_zip_rings(offsets[k], rings[k][1], offsets[k + 1], rings[k + 1][1]))
    inner_off, inner_theta = offsets[-1], rings[-1][1]
    m = len(inner_theta)
    for j in range(m):
        tris.append((inner_off + j, inner_off + (j + 1) % m, center))
    cells = np.array(tris, dtype=np.int64)
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[: len(rings[0][1])] = True
    return Mesh(2, vertices, cells, boundary, grading_mu=float(mu), target_h=float(h))


def _zip_rings(off_a, theta_a, off_b, theta_b):
    """Triangulate the annular strip between an outer ring a and inner ring b.

    Both rings are counter-clockwise; the zipper advances whichever ring has
    the smaller next angle.
    """
    na, nb = len(theta_a), len(theta_b)
    two_pi = 2 * math.pi
    alpha = np.append(theta_a, theta_a[0] + two_pi)
    rel = (theta_b - theta_a[0] + math.pi) % two_pi - math.pi
    j0 = int(np.argmin(np.abs(rel)))
    order = (j0 + np.arange(nb + 1)) % nb
    beta = theta_a[0] + rel[j0] + np.append(np.unwrap(theta_b[order[:-1]]) - theta_b[j0], two_pi)
    tris = []
    i = j = 0
    while i < na or j < nb:
        a0 = off_a + i % na
        b0 = off_b + order[j]
        if j == nb or (i < na and alpha[i + 1] <= beta[j + 1]):
            tris.append((a0, off_a + (i + 1) % na, b0))
            i += 1
        else:
            tris.append((a0, off_b + order[j + 1], b0))
            j += 1
    return tris


# -- text format -------------------------------------------------------------


def export_mesh(mesh: Mesh) -> str:
    lines = [
        f"{MESH_HEADER} dim={mesh.dimension} mu={mesh.grading_mu!r} h={mesh.target_h!r}",
        f"vertices {mesh.n_vertices}",
    ]
    for xyz, flag in zip(mesh.vertices, mesh.boundary):
        lines.append(" ".join(repr(float(c)) for c in xyz) + f" {int(flag)}")
    lines.append(f"cells {mesh.n_cells}")
    for cell in mesh.cells:
        lines.append(" ".join(str(int(k)) for k in cell))
    return "\n".join(lines) + "\n"


def import_mesh(text: str) -> Mesh:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise MeshFormatError("empty mesh file")
    head = rows[0].split()
    if " ".join(head[:2]) != MESH_HEADER:
        raise MeshFormatError(f"malformed header: {rows[0]!r}")
    meta = {}
    for tok in head[2:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise MeshFormatError(f"malformed header token {tok!r}")
        meta[key] = val
    try:
        dim = int(meta["dim"])
        mu = float(meta["mu"])
        h = float(meta["h"])
    except (KeyError, ValueError) as exc:
        raise MeshFormatError(f"malformed header: {rows[0]!r}") from exc
    if dim not in (1, 2):
        raise MeshFormatError(f"unsupported dimension {dim}")

    def section(pos, name):
        parts = rows[pos].split() if pos < len(rows) else []
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected '{name} <count>' at record {pos}")
        try:
            return int(parts[1])
        except ValueError as exc:
            raise MeshFormatError(f"bad {name} count {parts[1]!r}") from exc

    nv = section(1, "vertices")
    if len(rows) < 2 + nv:
        raise MeshFormatError("truncated vertex block")
    verts, flags = [], []
    for line in rows[2:2 + nv]:
        parts = line.split()
        if len(parts) != dim + 1 or parts[-1] not in ("0", "1"):
            raise MeshFormatError(f"bad vertex line {line!r}")
        try:
            verts.append([float(p) for p in parts[:dim]])
        except ValueError as exc:
            raise MeshFormatError(f"bad vertex line {line!r}") from exc
        flags.append(parts[-1] == "1")
    nc = section(2 + nv, "cells")
    body = rows[3 + nv:]
    if len(body) != nc:
        raise MeshFormatError(f"expected {nc} cell lines, found {len(body)}")
    cells = []
    for line in body:
        parts = line.split()
        if len(parts) != dim + 1:
            raise MeshFormatError(f"bad cell line {line!r}")
        try:
            idx = [int(p) for p in parts]
        except ValueError as exc:
            raise MeshFormatError(f"bad cell line {line!r}") from exc
        for k in idx:
            if not 0 <= k < nv:
                raise MeshFormatError(f"cell references vertex index {k} of {nv}: index out of range")
        cells.append(idx)
    return Mesh(dim, np.array(verts, dtype=float), np.array(cells, dtype=np.int64),
                np.array(flags), grading_mu=mu, target_h=h)


# -- shape audit ---------------------------------------------------------------


@dataclass(frozen=True)
class ShapeReport:
    lambda1: float
    lambda2: float
    lam: float
    grading_deviation: float

    def as_dict(self) -> dict:
        return {"lambda1": self.lambda1, "lambda2": self.lambda2,
                "lambda": self.lam, "grading_deviation": self.grading_deviation}


def _graded_target(mesh: Mesh) -> np.ndarray:
    """Cell size prescribed by the grading law, per cell."""
    mu, h = mesh.grading_mu, mesh.target_h
    L = mesh.inradius
    touches = mesh.boundary[mesh.cells].any(axis=1)
    dist = mesh.boundary_distance[mesh.cells].min(axis=1)
    interior = h * (np.maximum(dist, 1e-300) / L) ** ((mu - 1) / mu)
    return np.where(touches, L * (h / L) ** mu, interior)


def compute_shape_constants(mesh: Mesh) -> ShapeReport:
    hT = mesh.cell_sizes
    if mesh.dimension == 1:
        lambda1 = 1.0
    else:
        v = mesh.vertices
        c = mesh.cells
        perim = sum(np.linalg.norm(v[c[:, (k + 1) % 3]] - v[c[:, k]], axis=1) for k in range(3))
        rho = 4.0 * mesh.signed_areas / perim  # inscribed-circle diameter
        lambda1 = float(np.max(hT / rho))
    # neighbors share at least a vertex: compare extremes over each vertex star
    nv = mesh.n_vertices
    hmax = np.zeros(nv)
    hmin = np.full(nv, np.inf)
    for k in range(mesh.cells.shape[1]):
        np.maximum.at(hmax, mesh.cells[:, k], hT)
        np.minimum.at(hmin, mesh.cells[:, k], hT)
    used = np.isfinite(hmin)
    lambda2 = float(np.max(hmax[used] / hmin[used]))
    if mesh.target_h > 0:
        target = _graded_target(mesh)
        ratio = hT / target
        deviation = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    else:
        deviation = float("nan")
    return ShapeReport(lambda1, lambda2, 2.0 * lambda1 * lambda2, deviation)


# -- node classification -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class NodeClassification:
    """Per-interior-node scales for the two-scale stencil.

    Arrays are indexed by interior row (``vertex_ids[row]`` is the mesh vertex).
    ``shape`` is "interval" (half-width H) or "square" (half-side H/sqrt(2)).
    """

    vertex_ids: np.ndarray
    delta: np.ndarray
    patch_radius: np.ndarray
    big_scale: np.ndarray
    is_delta_interior: np.ndarray
    shape: str
    alpha: float
    delta0: float
    c_delta: float

    @property
    def half_width(self) -> np.ndarray:
        """Half-width of the singular-part region around each node."""
        if self.shape == "square":
            return self.big_scale / math.sqrt(2.0)
        return self.big_scale

    def omega_i(self, row: int) -> dict:
        return {"shape": self.shape, "center_vertex": int(self.vertex_ids[row]),
                "H": float(self.big_scale[row]), "half_width": float(self.half_width[row])}


def patch_radii(mesh: Mesh) -> np.ndarray:
    """Radius of the largest ball centred at each vertex inside its patch."""
    v = mesh.vertices
    c = mesh.cells
    r = np.full(mesh.n_vertices, np.inf)
    if mesh.dimension == 1:
        L = mesh.cell_sizes
        for k in range(2):
            np.minimum.at(r, c[:, k], L)
        return r
    for k in range(3):
        x = v[c[:, k]]
        p, q = v[c[:, (k + 1) % 3]], v[c[:, (k + 2) % 3]]
        np.minimum.at(r, c[:, k], _segment_distance(x, p, q))
    return r


def c_delta_constant(alpha: float, lam: float, c_bar: float = 1.0) -> float:
    return max((2.0 * max(c_bar, 1.0)) ** (1.0 / alpha), 2.0 * lam)


def classify_nodes(mesh: Mesh, alpha: float, delta0: Optional[float] = None,
                   shape_report: Optional[ShapeReport] = None) -> NodeClassification:
    """Compute delta_i, h_i, H_i = h_i**alpha * min(delta_i, delta0)**(1 - alpha).

    ``delta0`` defaults to half the domain diameter.
    """
    if not 0.5 <= alpha <= 1.0:
        raise MeshError(f"alpha={alpha} outside [1/2, 1]")
    if delta0 is None:
        delta0 = 0.5 * mesh.diameter
    if not delta0 > 0:
        raise MeshError(f"delta0 must be positive, got {delta0}")
    ids = mesh.interior_ids
    delta = mesh.boundary_distance[ids]
    hi = patch_radii(mesh)[ids]
    if np.any(~np.isfinite(hi)):
        bad = int(ids[np.flatnonzero(~np.isfinite(hi))[0]])
        raise MeshError(f"vertex {bad} has an empty patch")
    # h_i <= delta_i holds exactly in exact arithmetic
    hi = np.minimum(hi, delta)
    H = hi ** alpha * np.minimum(delta, delta0) ** (1.0 - alpha)
    H = np.minimum(H, delta)
    if shape_report is None:
        shape_report = compute_shape_constants(mesh)
    cd = c_delta_constant(alpha, shape_report.lam)
    shape = "interval" if mesh.dimension == 1 else "square"
    return NodeClassification(
        _freeze(ids.copy()), _freeze(delta), _freeze(hi), _freeze(H),
        _freeze(delta / hi >= cd), shape, float(alpha), float(delta0), float(cd),
    )


# -- point location ------------------------------------------------------------


class _PointLocator:
    """Bucket grid over cell bounding boxes; lowest cell index wins ties."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        v, c = mesh.vertices, mesh.cells
        if mesh.dimension == 1:
            lo = np.minimum(v[c[:, 0], 0], v[c[:, 1], 0])
            order = np.lexsort((np.arange(len(c)), lo))
            self.order = order
            self.lo = lo[order]
            self.hi = np.maximum(v[c[:, 0], 0], v[c[:, 1], 0])[order]
            return
        tri = v[c]
        self.bmin = tri.min(axis=1)
        self.bmax = tri.max(axis=1)
        self.origin = v.min(axis=0)
        extent = v.max(axis=0) - self.origin
        nb = max(1, int(math.sqrt(len(c))))
        self.nb = nb
        self.cell_size = np.where(extent > 0, extent / nb, 1.0)
        i0 = self._bucket(self.bmin - 1e-12)
        i1 = self._bucket(self.bmax + 1e-12)
        buckets: dict[tuple[int, int], list[int]] = {}
        for t in range(len(c)):
            for bx in range(i0[t, 0], i1[t, 0] + 1):
                for by in range(i0[t, 1], i1[t, 1] + 1):
                    buckets.setdefault((bx, by), []).append(t)
        self.buckets = {k: np.array(sorted(t)) for k, t in buckets.items()}
        # barycentric maps: lambda = M @ (x - a) for lambda_1, lambda_2
        a, b, cc = tri[:, 0], tri[:, 1], tri[:, 2]
        T = np.stack([b - a, cc - a], axis=2)  # columns
        self.a = a
        self.Tinv = np.linalg.inv(T)

    def _bucket(self, x):
        idx = np.floor((np.asarray(x) - self.origin) / self.cell_size).astype(int)
        return np.clip(idx, 0, self.nb - 1)

    def locate(self, x, tol=COORD_TOL):
        if self.mesh.dimension == 1:
            return self._locate_1d(float(np.ravel(x)[0]), tol)
        x = np.asarray(x, dtype=float).reshape(2)
        key = tuple(self._bucket(x))
        cand = self.buckets.get(key)
        if cand is not None:
            l12 = np.einsum("kij,kj->ki", self.Tinv[cand], x - self.a[cand])
            lam = np.column_stack([1.0 - l12.sum(axis=1), l12])
            ok = np.flatnonzero(lam.min(axis=1) >= -tol)
            if len(ok):
                t = int(cand[ok[0]])
                w = np.clip(lam[ok[0]], 0.0, None)
                return t, w / w.sum()
        raise MeshError(f"point {tuple(x)} lies outside the domain")

    def _locate_1d(self, x, tol):
        pos = int(np.searchsorted(self.lo, x, side="right")) - 1
        span = self.hi - self.lo
        # first containing cell in index order among the (at most two) candidates
        hits = []
        for k in (pos - 1, pos, pos + 1):
            if 0 <= k < len(self.lo) and self.lo[k] - tol * span[k] <= x <= self.hi[k] + tol * span[k]:
                hits.append(int(self.order[k]))
        if not hits:
            raise MeshError(f"point {x} lies outside the domain")
        t = min(hits)
        a, b = self.mesh.vertices[self.mesh.cells[t], 0]
        lam_b = min(max((x - a) / (b - a), 0.0), 1.0)
        return t, np.array([1.0 - lam_b, lam_b])


def locate_point(mesh: Mesh, x) -> tuple[int, np.ndarray]:
    """Return (cell index, barycentric weights) of the cell containing ``x``.

    Weights follow the cell's vertex order. Points on shared facets resolve to
    the lowest-indexed containing cell.
    """
    return mesh._locator.locate(x)


def locate_points(mesh: Mesh, xs: Sequence) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=float).reshape(-1, mesh.dimension)
    cells = np.empty(len(xs), dtype=np.int64)
    weights = np.empty((len(xs), mesh.dimension + 1))
    for k, x in enumerate(xs):
        cells[k], weights[k] = locate_point(mesh, x)
    return cells, weights
