import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclap.mesh import (Mesh, MeshError, MeshFormatError, build_disk_mesh, build_interval_mesh,
                          classify_nodes, compute_shape_constants, export_mesh, import_mesh, locate_point,
                          locate_points, patch_radii)


def test_uniform_interval_nodes():
    m = build_interval_mesh(-1, 1, 0.5, 1)
    np.testing.assert_array_equal(m.vertices[:, 0], [-1, -0.5, 0, 0.5, 1])
    assert m.n_cells == 4
    np.testing.assert_array_equal(m.boundary, [True, False, False, False, True])


def test_graded_interval_first_node():
    m = build_interval_mesh(-1, 1, 0.25, 2)
    x = np.sort(m.vertices[:, 0])
    assert x[1] - x[0] == pytest.approx(0.0625, abs=1e-15)
    assert x[-1] - x[-2] == pytest.approx(0.0625, abs=1e-15)
    # symmetric about the midpoint
    np.testing.assert_allclose(x, -x[::-1], atol=1e-15)


@pytest.mark.parametrize("h", [0.6, 1.0])
def test_interval_too_coarse(h):
    with pytest.raises(MeshError):
        build_interval_mesh(-1, 1, h, 1)


def test_interval_bad_range():
    with pytest.raises(MeshError):
        build_interval_mesh(1, -1, 0.1, 1)


def test_graded_mu_one_is_uniform():
    h = 1 / 16
    a = build_interval_mesh(-1, 1, h, 1.0)
    x = np.sort(a.vertices[:, 0])
    np.testing.assert_allclose(np.diff(x), h, rtol=1e-13)


def test_disk_boundary_on_circle():
    m = build_disk_mesh(1.0, 0.5, 1.0)
    bv = m.vertices[m.boundary]
    np.testing.assert_allclose(np.hypot(bv[:, 0], bv[:, 1]), 1.0, atol=1e-14)
    iv = m.vertices[~m.boundary]
    assert np.all(np.hypot(iv[:, 0], iv[:, 1]) < 1.0)


def test_disk_bad_input():
    with pytest.raises(MeshError):
        build_disk_mesh(-1.0, 0.1, 1.0)
    with pytest.raises(MeshError):
        build_disk_mesh(1.0, 0.9, 1.0)


@pytest.mark.parametrize("mu", [1.0, 2.0])
def test_disk_mesh_invariants(mu):
    m = build_disk_mesh(1.0, 0.2, mu)
    assert np.all(m.signed_areas > 0)
    # interior edges are shared by exactly two triangles
    counts = m._edge_use_counts
    assert set(np.unique(counts)) <= {1, 2}
    rep = compute_shape_constants(m)
    assert rep.grading_deviation <= 4.0
    assert all(np.isfinite(v) and v >= 1.0 for v in rep.as_dict().values())


def test_disk_graded_boundary_strip():
    m = build_disk_mesh(1.0, 0.2, 2.0)
    diam = np.max(np.linalg.norm(m.vertices[m.cells] - np.roll(m.vertices[m.cells], 1, axis=1), axis=2), axis=1)
    touches = m.boundary[m.cells].any(axis=1)
    smallest = diam[touches].min()
    assert 0.04 / 4 <= smallest <= 0.04 * 4


def test_disk_dof_scaling():
    hs = [0.2, 0.1, 0.05]
    N = [len(build_disk_mesh(1.0, h, 1.0).interior_ids) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(N), 1)[0]
    assert abs(slope + 2) <= 0.3


def test_round_trip_interval_text():
    m = build_interval_mesh(-1, 1, 0.5, 1)
    text = export_mesh(m)
    lines = text.splitlines()
    assert lines[0].startswith("fraclap-mesh v1 dim=1")
    assert lines[1] == "vertices 5" and lines[7] == "cells 4"
    assert len(lines) == 1 + 1 + 5 + 1 + 4
    assert import_mesh(text) == m


@pytest.mark.parametrize("mu", [1.0, 1.5])
def test_round_trip_disk(mu):
    m = build_disk_mesh(1.0, 0.25, mu)
    back = import_mesh(export_mesh(m))
    assert back == m
    np.testing.assert_array_equal(back.cells, m.cells)
    np.testing.assert_array_equal(back.vertices, m.vertices)


def test_import_comments_and_whitespace():
    text = "# a comment\nfraclap-mesh v1 dim=1 mu=1.0 h=0.5\nvertices 3  # three\n-1 1\n0  0\n1 1\ncells 2\n0 1\n1 2\n"
    m = import_mesh(text)
    assert m.n_vertices == 3


def test_import_index_out_of_range():
    m = build_interval_mesh(-1, 1, 0.2, 1)
    lines = export_mesh(m).splitlines()
    lines[-1] = "8 99"
    with pytest.raises(MeshFormatError, match="out of range"):
        import_mesh("\n".join(lines))


@pytest.mark.parametrize("text", ["", "junk\n", "fraclap-mesh v2 dim=1 mu=1 h=1\n",
                                  "fraclap-mesh v1 dim=3 mu=1 h=1\nvertices 0\ncells 0\n",
                                  "fraclap-mesh v1 dim=1 mu=1 h=1\nvertices 2\n0 1\n",
                                  "fraclap-mesh v1 dim=1 mu=1 h=1\nvertices 2\n0 1\n1 x\ncells 1\n0 1\n"])
def test_import_malformed(text):
    with pytest.raises(MeshFormatError):
        import_mesh(text)


def test_import_inverted_triangle():
    text = ("fraclap-mesh v1 dim=2 mu=1 h=1\nvertices 3\n0 0 1\n0 1 1\n1 0 1\n"
            "cells 1\n0 1 2\n")
    with pytest.raises(MeshError, match="inverted"):
        import_mesh(text)


def test_wrong_boundary_flag_rejected():
    with pytest.raises(MeshError, match="boundary flag"):
        Mesh(1, [[-1.0], [0.0], [1.0]], [[0, 1], [1, 2]], [True, True, True])


def test_classify_uniform_center_node():
    m = build_interval_mesh(-1, 1, 0.5, 1)
    c = classify_nodes(m, 0.5, delta0=1.0)
    row = int(np.flatnonzero(m.vertices[c.vertex_ids, 0] == 0.0)[0])
    assert c.delta[row] == 1.0
    assert c.patch_radius[row] == 0.5
    assert c.big_scale[row] == pytest.approx(math.sqrt(0.5), rel=1e-15)
    c1 = classify_nodes(m, 1.0, delta0=1.0)
    assert c1.big_scale[row] == 0.5


@pytest.mark.parametrize("builder", [lambda: build_interval_mesh(-1, 1, 1 / 64, 3.0),
                                     lambda: build_disk_mesh(1.0, 0.1, 1.5)])
@pytest.mark.parametrize("alpha", [0.5, 0.75, 1.0])
def test_classification_invariants(builder, alpha):
    m = builder()
    c = classify_nodes(m, alpha)
    assert np.all(c.patch_radius > 0)
    assert np.all(c.patch_radius <= c.delta)
    assert np.all(c.big_scale <= c.delta)
    # the singular region lies inside the polygonal domain: check its corners
    x = m.vertices[c.vertex_ids]
    a = c.half_width
    if m.dimension == 1:
        corners = [x[:, 0] - a, x[:, 0] + a]
        lo, hi = m.domain_bounds
        for p in corners:
            assert np.all((p >= lo - 1e-14) & (p <= hi + 1e-14))
    else:
        for sx in (-1, 1):
            for sy in (-1, 1):
                pts = x + np.column_stack([sx * a, sy * a])
                cells, _ = locate_points(m, pts)
                assert np.all(cells >= 0)


def test_delta_interior_monotone():
    m = build_interval_mesh(-1, 1, 1 / 32, 1.0)
    c = classify_nodes(m, 0.5)
    ratio = c.delta / c.patch_radius
    order = np.argsort(ratio)
    flags = c.is_delta_interior[order]
    # once a node is delta-interior every node with a larger ratio is too
    first = np.argmax(flags) if flags.any() else len(flags)
    assert np.all(flags[first:])


def test_classify_bad_alpha():
    m = build_interval_mesh(-1, 1, 0.25, 1)
    with pytest.raises(MeshError):
        classify_nodes(m, 0.3)


def test_shape_uniform_1d():
    rep = compute_shape_constants(build_interval_mesh(-1, 1, 0.125, 1))
    assert rep.lambda2 == pytest.approx(1.0, abs=1e-14)
    assert rep.grading_deviation == pytest.approx(1.0, abs=1e-12)


def test_shape_graded_1d():
    rep = compute_shape_constants(build_interval_mesh(-1, 1, 1 / 32, 2.0))
    assert np.isfinite(rep.grading_deviation) and rep.grading_deviation <= 4.0


def test_equilateral_lambda1():
    # h_T over the diameter of the inscribed circle
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    m = Mesh(2, v, [[0, 1, 2]], [True, True, True])
    rep = compute_shape_constants(m)
    assert rep.lambda1 == pytest.approx(math.sqrt(3), rel=1e-12)
    assert rep.lam == pytest.approx(2 * rep.lambda1 * rep.lambda2)


def test_patch_radii_disk_center():
    m = build_disk_mesh(1.0, 0.25, 1.0)
    r = patch_radii(m)
    assert np.all(np.isfinite(r)) and np.all(r > 0)


def test_locate_vertex_and_midpoint():
    m = build_interval_mesh(-1, 1, 0.25, 1)
    cell, w = locate_point(m, [-0.125])
    np.testing.assert_allclose(sorted(w), [0.5, 0.5])
    x = np.sort(m.vertices[m.cells[cell], 0])
    assert x[0] <= -0.125 <= x[1]
    d = build_disk_mesh(1.0, 0.2, 1.0)
    for k in (0, 7, d.n_vertices - 1):
        cell, w = locate_point(d, d.vertices[k])
        j = list(d.cells[cell]).index(k)
        assert w[j] == pytest.approx(1.0, abs=1e-12)


def test_locate_tie_break_lowest_cell():
    m = build_interval_mesh(-1, 1, 0.25, 1)
    cell, _ = locate_point(m, [0.0])
    owners = np.flatnonzero((m.cells == int(np.flatnonzero(m.vertices[:, 0] == 0.0)[0])).any(axis=1))
    assert cell == owners.min()


def test_locate_outside():
    m = build_disk_mesh(1.0, 0.25, 1.0)
    with pytest.raises(MeshError):
        locate_point(m, [2.0, 0.0])
    with pytest.raises(MeshError):
        locate_point(build_interval_mesh(-1, 1, 0.25, 1), [1.5])


_DISK = build_disk_mesh(1.0, 0.15, 1.3)


@settings(max_examples=1000, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * math.pi))
def test_locate_reconstruction(r, t):
    x = np.array([r * math.cos(t), r * math.sin(t)])
    cell, w = locate_point(_DISK, x)
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-14
    rec = w @ _DISK.vertices[_DISK.cells[cell]]
    assert np.max(np.abs(rec - x)) < 1e-12
