import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclflex import lp


def _prob(**kw):
    return lp.LpProblem(**kw)


def test_single_variable_lower_bound():
    sol = lp.solve(_prob(c=[1.0], bounds=(3.0, None)), "simplex")
    assert sol.status == lp.OPTIMAL
    assert sol.objective == pytest.approx(3.0)


def test_simplex_triangle():
    sol = lp.solve(_prob(c=[-1.0, -1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0]), "simplex")
    assert sol.ok and sol.objective == pytest.approx(-1.0)


def test_infeasible_and_unbounded_classified():
    infeasible = _prob(c=[1.0], a_ub=[[1.0], [-1.0]], b_ub=[0.0, -1.0], bounds=(None, None))
    unbounded = _prob(c=[-1.0], bounds=(None, None))
    for method in ("simplex", "highs"):
        assert lp.solve(infeasible, method).status == lp.INFEASIBLE
        assert lp.solve(unbounded, method).status == lp.UNBOUNDED


def test_equality_with_redundant_row():
    # second equality is twice the first; phase 1 must drop it
    p = _prob(c=[1.0, 2.0], a_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
    sol = lp.solve(p, "simplex")
    assert sol.ok and sol.objective == pytest.approx(1.0)
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-12)


def test_free_and_upper_bounded_variables():
    p = _prob(c=[1.0, -1.0], a_ub=[[-1.0, 0.0]], b_ub=[4.0], bounds=[(None, None), (None, 2.5)])
    sol = lp.solve(p, "simplex")
    assert sol.ok
    np.testing.assert_allclose(sol.x, [-4.0, 2.5])


def test_solve_or_raise():
    with pytest.raises(lp.LpError):
        lp.solve_or_raise(_prob(c=[-1.0], bounds=(None, None)), "simplex", "test")


def test_unknown_method():
    with pytest.raises(ValueError):
        lp.solve(_prob(c=[1.0]), "interior")


def test_degenerate_cycling_example():
    # classic Beale example that cycles under naive Dantzig pricing
    c = [-0.75, 150.0, -0.02, 6.0]
    a = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
    sol = lp.solve(_prob(c=c, a_ub=a, b_ub=[0.0, 0.0, 1.0]), "simplex")
    assert sol.ok
    assert sol.objective == pytest.approx(-0.05)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_simplex_matches_highs_and_duals_certify(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, 6))
    k = int(r.integers(1, 8))
    a = r.normal(size=(k, n))
    x_feas = r.uniform(0, 1, n)
    b = a @ x_feas + r.uniform(0, 1, k)
    c = r.normal(size=n)
    p = _prob(c=c, a_ub=a, b_ub=b, bounds=(0.0, 3.0))
    s1, s2 = lp.solve(p, "simplex"), lp.solve(p, "highs")
    assert s1.status == s2.status == lp.OPTIMAL
    assert s1.objective == pytest.approx(s2.objective, abs=1e-8, rel=1e-8)
    # dual feasibility and complementary slackness on the inequality rows
    assert np.all(s1.dual_ub >= -1e-9)
    assert np.allclose(s1.dual_ub * (b - a @ s1.x), 0.0, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_returned_point_is_feasible(seed):
    r = np.random.default_rng(seed)
    n, k = 3, 5
    a = r.normal(size=(k, n))
    b = r.normal(size=k)
    p = _prob(c=r.normal(size=n), a_ub=a, b_ub=b, bounds=(-2.0, 2.0))
    sol = lp.solve(p, "simplex")
    if sol.ok:
        assert np.all(a @ sol.x <= b + 1e-9)
        assert np.all(np.abs(sol.x) <= 2.0 + 1e-9)
    else:
        assert sol.status == lp.INFEASIBLE
        assert lp.solve(p, "highs").status == lp.INFEASIBLE
