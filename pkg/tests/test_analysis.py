import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import fraclap.analysis as analysis_mod
from fraclap.analysis import (SchemeConfig, StudyAborted, exact_solution_ball, expected_rate, fit_rate,
                              nodal_error, optimal_alpha, optimal_mu, run_convergence_study, run_level)
from fraclap.mesh import build_disk_mesh, build_interval_mesh, classify_nodes
from fraclap.operator import MonotonicityReport, assemble
from fraclap.solver import DiscreteSolution, solve_direct


# -- exact solution ------------------------------------------------------------


def test_exact_center_values():
    assert exact_solution_ball(1, 0.5, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert exact_solution_ball(2, 0.5, [0.0, 0.0]) == pytest.approx(2 / math.pi, abs=1e-12)


def test_exact_boundary_and_outside():
    assert exact_solution_ball(2, 0.5, [1.0, 0.0]) == 0.0
    assert exact_solution_ball(1, 0.3, 1.0) == 0.0
    assert exact_solution_ball(1, 0.3, -1.5) == 0.0
    vals = exact_solution_ball(2, 0.7, np.array([[0.6, 0.8], [2.0, 0.0], [0.0, -1.0]]))
    np.testing.assert_array_equal(vals, 0.0)


def test_exact_radial_profile():
    s = 0.35
    x = np.array([[0.1], [0.5], [0.9]])
    u0 = exact_solution_ball(1, s, 0.0)
    np.testing.assert_allclose(exact_solution_ball(1, s, x), u0 * (1 - x[:, 0] ** 2) ** s, rtol=1e-14)


def test_exact_bad_input():
    with pytest.raises(ValueError):
        exact_solution_ball(3, 0.5, [0, 0, 0])
    with pytest.raises(ValueError):
        exact_solution_ball(1, 1.0, 0.0)


# -- nodal error ---------------------------------------------------------------


@pytest.mark.parametrize("dim", [1, 2])
def test_nodal_error_zero_closure(dim):
    s = 0.4
    mesh = build_interval_mesh(-1, 1, 1 / 8, 1) if dim == 1 else build_disk_mesh(1.0, 0.25, 1.0)
    ids = np.flatnonzero(~mesh.boundary)
    exact = lambda x: exact_solution_ball(dim, s, x)
    sol = DiscreteSolution(exact(mesh.vertices[ids]), 0.0, "direct", mesh=mesh, interior_ids=ids)
    assert nodal_error(sol, exact) == 0.0
    err, cell = nodal_error(sol, exact, samples=True)
    assert err == 0.0 and cell > 0.0


def test_nodal_error_solve_nonnegative():
    m = build_interval_mesh(-1, 1, 1 / 16, 1)
    A = assemble(m, classify_nodes(m, 0.5), 0.5)
    sol = solve_direct(A, np.ones(A.size), mesh=m)
    err = nodal_error(sol, lambda x: exact_solution_ball(1, 0.5, x))
    assert np.isfinite(err) and err >= 0


def test_unit_alpha_error_ratio():
    # N ~ 1024 and ~ 2048 interior nodes; rate min{s, 2 - 2s} = 0.5
    errs = [run_level(SchemeConfig(s=0.5, mode="huang_oberman"), h).linf_error for h in (2 ** -9, 2 ** -10)]
    ratio = errs[0] / errs[1]
    assert abs(ratio / 2 ** 0.5 - 1) <= 0.15


# -- expected rates ------------------------------------------------------------


def test_expected_rate_examples():
    assert expected_rate(1, 0.5, 1, 1)[0] == pytest.approx(0.5, abs=1e-14)
    assert expected_rate(1, 0.6, 1, 0.5)[0] == pytest.approx(0.6, abs=1e-14)
    assert expected_rate(1, 0.6, (2 - 0.6) / 0.6, 0.5)[0] == pytest.approx(1.4, abs=1e-12)
    assert expected_rate(1, 0.8, 1, 1)[0] == pytest.approx(0.4, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99))
def test_expected_rate_uniform_optimal_alpha_is_s(s):
    rate, _ = expected_rate(1, s, 1.0, 0.5)
    assert rate == pytest.approx(s, abs=1e-14)


def test_expected_rate_in_N():
    s = 0.5
    assert expected_rate(2, s, 1.0, 0.5, variable="N")[0] == pytest.approx(-s / 2)
    # critical grading carries a log factor
    r, flag = expected_rate(2, 0.9, 2.0, 0.5, variable="N")
    assert r == pytest.approx(-(2 - 0.9) / 2) and flag
    assert expected_rate(2, 0.3, 3.0, 0.5, variable="N")[0] == pytest.approx(-0.9 / 3)
    assert expected_rate(1, 0.4, 1.0, 0.5, variable="N")[0] == pytest.approx(-0.4)


def test_expected_rate_log_flag():
    # smooth data: both log indices are 1, so only a binding stencil term carries the flag
    assert not expected_rate(1, 0.5, 1, 1)[1]
    assert not expected_rate(1, 0.3, 1, 0.5)[1]
    assert expected_rate(1, 0.6, (2 - 0.6) / 0.6, 0.5)[1]
    assert expected_rate(1, 0.8, 1, 1)[1]


def test_expected_rate_bad_input():
    with pytest.raises(ValueError):
        expected_rate(1, 0.5, 0.5, 1)
    with pytest.raises(ValueError):
        expected_rate(1, 0.5, 1, 0.4)
    with pytest.raises(ValueError):
        expected_rate(1, 0.5, 1, 1, variable="x")


def test_optimal_parameters():
    assert optimal_alpha() == 0.5
    assert optimal_mu(1, 0.6) == pytest.approx((2 - 0.6) / 0.6)
    assert optimal_mu(1, 0.9) == pytest.approx(1.0 / 0.9 * 2 - 1)
    # 2D: the lower end of the admissible range for s > 2/3, the critical value n/(n-1) below
    assert optimal_mu(2, 0.9) == pytest.approx(2 / 0.9 - 1)
    assert optimal_mu(2, 0.5) == pytest.approx(2.0)
    assert optimal_mu(2, 2 / 3) == pytest.approx(2.0)
    # graded N-rate at optimal mu reaches -(2 - s)/2 in 2D
    s = 0.9
    assert expected_rate(2, s, optimal_mu(2, s), 0.5, variable="N")[0] == pytest.approx(-(2 - s) / 2)


# -- rate fitting --------------------------------------------------------------


def test_fit_rate_exact_quadratic():
    assert fit_rate([(1, 1), (0.5, 0.25), (0.25, 0.0625)]) == pytest.approx(2.0, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(1e-3, 1e3))
def test_fit_rate_power_law(s, c):
    xs = [2.0 ** -k for k in range(3, 9)]
    assert fit_rate([(x, c * x ** s) for x in xs]) == pytest.approx(s, abs=1e-12)


def test_fit_rate_noisy():
    rng = np.random.default_rng(5)
    xs = np.geomspace(1e-1, 1e-4, 12)
    for _ in range(50):
        e = xs * rng.uniform(0.95, 1.05, xs.size)
        assert abs(fit_rate(zip(xs, e)) - 1.0) <= 0.1


def test_fit_rate_errors():
    with pytest.raises(ValueError):
        fit_rate([(1, 1), (0.5, 0.5)])
    with pytest.raises(ValueError):
        fit_rate([(1, 1), (0.5, 0.0), (0.25, 0.1)])


# -- studies -------------------------------------------------------------------


_SMALL = SchemeConfig(s=0.5, dimension=1, mode="custom", alpha=0.5, mu=1.0,
                      h_values=(2 ** -4, 2 ** -5, 2 ** -6, 2 ** -7, 2 ** -8))


def test_study_errors_decrease_and_sorted():
    rep = run_convergence_study(_SMALL)
    hs = [r.h for r in rep.runs]
    assert hs == sorted(hs, reverse=True)
    errs = [r.linf_error for r in rep.runs]
    assert all(e > 0 for e in errs)
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert rep.expected_rate == 0.5 and rep.variable == "h"
    assert rep.beta_tilde == 2.0 and rep.beta_hat == 4.0
    assert all(r.monotone for r in rep.runs)


def test_study_determinism():
    a = run_convergence_study(_SMALL)
    b = run_convergence_study(_SMALL)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_study_order_independent_of_input_order():
    shuffled = SchemeConfig(**{**_SMALL.__dict__, "h_values": (2 ** -6, 2 ** -4, 2 ** -8, 2 ** -5, 2 ** -7)})
    assert run_convergence_study(shuffled).to_json() == run_convergence_study(_SMALL).to_json()


def test_study_parallel_matches_serial():
    assert run_convergence_study(_SMALL, jobs=2).to_json() == run_convergence_study(_SMALL).to_json()


def test_study_serializations(tmp_path):
    rep = run_convergence_study(_SMALL)
    rep.write(tmp_path / "r.json", tmp_path / "r.csv")
    d = json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
    assert d["fitted_rate"] == rep.fitted_rate and len(d["runs"]) == 5
    rows = list(csv.reader(io.StringIO((tmp_path / "r.csv").read_text(encoding="utf-8"))))
    assert rows[0] == ["h", "N", "mu", "alpha", "s", "linf_error", "fitted_rate", "expected_rate"]
    assert len(rows) == 6
    assert float(rows[1][0]) == 2 ** -4 and int(rows[1][1]) == rep.runs[0].N


def test_study_fits_last_levels():
    rep = run_convergence_study(_SMALL)
    tail = rep.runs[-4:]
    assert rep.fitted_rate == fit_rate([(r.h, r.linf_error) for r in tail])


def test_study_aborts_on_failed_check(monkeypatch):
    real = analysis_mod.verify_monotone

    def broken(A, **kw):
        rep = real(A, **kw)
        if A.size > 40:
            return MonotonicityReport(False, (0, 1, 1.0), rep.barrier, rep.min_row_sum, rep.barrier_violation,
                                      rep.inverse_positive, rep.min_inverse_entry, rep.sampled_columns)
        return rep

    monkeypatch.setattr(analysis_mod, "verify_monotone", broken)
    with pytest.raises(StudyAborted) as info:
        run_convergence_study(_SMALL)
    assert info.value.h == 2 ** -5


def test_modes_resolve():
    ho = SchemeConfig(s=0.3, mode="huang_oberman", alpha=0.5, mu=2.0).resolved()
    assert (ho.alpha, ho.mu) == (1.0, 1.0)
    opt = SchemeConfig(s=0.6, mode="optimal").resolved()
    assert opt.alpha == 0.5 and opt.mu == pytest.approx((2 - 0.6) / 0.6)


@pytest.mark.parametrize("kw", [{"s": 1.2}, {"s": 0.5, "alpha": 0.3}, {"s": 0.5, "mu": 0.5},
                                {"s": 0.5, "dimension": 3}, {"s": 0.5, "mode": "fast"},
                                {"s": 0.5, "h_values": (0.1, -0.1)}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SchemeConfig(**kw)


def test_study_needs_three_levels():
    with pytest.raises(ValueError):
        run_convergence_study(SchemeConfig(s=0.5, h_values=(0.1, 0.05)))
