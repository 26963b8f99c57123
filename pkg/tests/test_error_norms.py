import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fvsubdiff.dg_stepper import DGSolution, graded_mesh
from fvsubdiff.error_norms import (
    Level,
    discrete_max_error,
    fine_nodes,
    l2_error_at,
    observed_rate,
    rate_table,
    sample_times,
)
from fvsubdiff.errors import InvalidParameterError
from fvsubdiff.mesh import build_uniform_mesh, eval_p1, nodal_interpolant
from fvsubdiff.problems import ManufacturedProblem, paper_problem, sin_sin


def linear_in_time_fixture(M=4, N=3):
    """u = (1 + 2t) sin sin; DG coefficients equal the nodal interpolant at the interval ends."""
    prob = ManufacturedProblem(0.5, ((1.0, 0.0), (2.0, 1.0)))
    mesh = build_uniform_mesh(M)
    tm = graded_mesh(N, 2.0)
    g = nodal_interpolant(mesh, sin_sin)
    t = tm.nodes
    a = np.array([(1 + 2 * t[n - 1]) * g for n in range(1, N + 1)])
    b = np.array([2 * (t[n] - t[n - 1]) * g for n in range(1, N + 1)])
    return prob, mesh, DGSolution(tm, g.copy(), a, b, N, mesh)


def perturbed(sol, seed=0):
    rng = np.random.default_rng(seed)
    return DGSolution(sol.time_mesh, sol.U0, sol.a + 1e-3 * rng.normal(size=sol.a.shape), sol.b, sol.completed, sol.mesh)


def test_exact_fixture_has_zero_error():
    prob, mesh, sol = linear_in_time_fixture()
    assert discrete_max_error(sol, prob, mesh.vertices, m=7) < 1e-14


def test_zero_solution_gives_envelope():
    prob = paper_problem(0.4)
    mesh = build_uniform_mesh(4)
    sol = DGSolution.empty(graded_mesh(5, 2.0), np.zeros(mesh.n_interior), mesh)
    sol.completed = 5
    err = discrete_max_error(sol, prob, mesh.vertices, m=4)
    assert err == pytest.approx(1.0, abs=1e-15)  # |u| peaks at the centre at t = 1


def test_error_monotone_under_enrichment():
    prob, mesh, sol = linear_in_time_fixture()
    sol = perturbed(sol)
    coarse = discrete_max_error(sol, prob, build_uniform_mesh(4).vertices, m=5)
    more_times = discrete_max_error(sol, prob, build_uniform_mesh(4).vertices, m=10)
    more_points = discrete_max_error(sol, prob, build_uniform_mesh(8).vertices, m=10)
    assert coarse <= more_times <= more_points


def test_sample_times_and_fine_nodes():
    np.testing.assert_allclose(sample_times(None, 4), [0.25, 0.5, 0.75, 1.0])
    for bad in (0, 2.5, -1):
        with pytest.raises(InvalidParameterError):
            sample_times(None, bad)
    assert len(fine_nodes(5)) == 11**2


def test_l2_error_of_zero_solution():
    prob = paper_problem(0.4)
    mesh = build_uniform_mesh(6)
    sol = DGSolution.empty(graded_mesh(4, 1.0), np.zeros(mesh.n_interior), mesh)
    sol.completed = 4
    # ||sin(pi x) sin(pi y)|| = 1/2
    assert l2_error_at(sol, prob, 1.0, degree=12) == pytest.approx(0.5, rel=1e-10)
    assert l2_error_at(sol, prob, 0.5, degree=12) == pytest.approx(0.5 * 0.5**0.4, rel=1e-10)


def test_l2_error_of_interpolant_is_second_order():
    errs = []
    for M in (8, 16, 32):
        prob, mesh, sol = linear_in_time_fixture(M, 2)
        errs.append(l2_error_at(sol, prob, 1.0, degree=6))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() >= 1.9


def test_l2_error_matches_adaptive_quadrature():
    prob, mesh, sol = linear_in_time_fixture(3, 2)
    sol = perturbed(sol, 4)
    t = 0.8
    coeffs = sol.coeffs_at(t)
    total = 0.0
    for corners in mesh.corners:
        p0, p1, p2 = corners
        e1, e2 = p1 - p0, p2 - p0
        J = abs(e1[0] * e2[1] - e1[1] * e2[0])

        def f(s, r):
            x, y = p0 + r * (p1 - p0) + s * (p2 - p0)
            U = eval_p1(mesh, coeffs, (x, y))
            return (U - float(prob.exact(x, y, t))) ** 2

        val, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, lambda r: 1.0 - r, epsabs=1e-13, epsrel=1e-12)
        total += J * val
    assert l2_error_at(sol, prob, t, degree=14) == pytest.approx(math.sqrt(total), rel=1e-8)


# ---------------------------------------------------------------------------
# rates


def test_rate_examples():
    assert observed_rate(4e-2, 1e-2, 10, 20) == pytest.approx(2.0, rel=1e-14)
    assert observed_rate(3.6522e-02, 9.6096e-03, 10, 20) == pytest.approx(1.9262, abs=5e-5)
    assert observed_rate(1.0, 0.5, 10, 40) == pytest.approx(0.5)
    assert observed_rate(0.0, 1e-3, 10, 20) is None
    assert observed_rate(1e-3, -1.0, 10, 20) is None
    assert observed_rate(1e-3, 1e-4, 10, 10) is None


def test_rate_table_uses_refined_parameter():
    levels = [Level(128, N, 2.0, e) for N, e in ((10, 1.2e-2), (20, 5.8e-3), (60, 1.9e-3))]
    report = rate_table(levels, "temporal", 0.6)
    assert report.refined == "N"
    assert report.levels[0].rate is None
    assert report.levels[1].rate == pytest.approx(math.log(1.2e-2 / 5.8e-3) / math.log(2))
    assert report.levels[2].rate == pytest.approx(math.log(5.8e-3 / 1.9e-3) / math.log(3))
    spatial = rate_table([Level(10, 5, 5.0, 4e-2), Level(20, 9, 5.0, 1e-2)], "spatial", 0.4)
    assert spatial.refined == "M" and spatial.rates() == [pytest.approx(2.0)]
    assert spatial.as_dict()["levels"][1]["N"] == 9
    with pytest.raises(InvalidParameterError):
        rate_table([])


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0.1, 4.0), c=st.floats(1e-6, 1e3), base=st.integers(2, 50), ratio=st.integers(2, 5))
def test_rate_recovers_power_law(p, c, base, ratio):
    e = lambda n: c * n ** (-p)
    assert observed_rate(e(base), e(base * ratio), base, base * ratio) == pytest.approx(p, rel=1e-9)
