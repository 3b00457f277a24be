import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclflex.fleet import AmbientProfile, TclParams, derive_linear_model
from tclflex.geometry import (
    EmptyPolytopeError,
    HPolytope,
    Homothet,
    UnboundedPolytopeError,
    VPolytope,
    apply_homothet,
    box_polytope,
    chebyshev_center,
    contains,
    dynamics_matrix,
    flex_polytope,
    hull_facets,
    is_empty,
    lambda_matrix,
    minkowski_brute,
    minkowski_homothets,
    same_vertex_set,
    support,
    vertices,
)


def test_lambda_matrix_half():
    expected = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.25, 0.5, 1.0]])
    np.testing.assert_array_equal(lambda_matrix(0.5, 3), expected)


def test_dynamics_matrix_inverts_lambda():
    for a in (0.1, 0.77, 0.99):
        np.testing.assert_allclose(dynamics_matrix(a, 6) @ lambda_matrix(a, 6), np.eye(6), atol=1e-14)


def test_unit_square_vertices():
    # box_polytope takes the magnitudes of the lower limits: this is [0, 1]^2
    v = vertices(box_polytope([0, 0], [1, 1]))
    assert same_vertex_set(v, VPolytope([[0, 0], [0, 1], [1, 0], [1, 1]]))


def test_square_minkowski_sum():
    a = vertices(box_polytope([1, 1], [1, 1]))
    b = vertices(box_polytope([2, 0.5], [2, 0.5]))
    s = minkowski_brute(a, b)
    assert same_vertex_set(s, VPolytope([[-3, -1.5], [-3, 1.5], [3, -1.5], [3, 1.5]]))


def test_hull_facets_round_trip():
    p = box_polytope([1, 2, 3], [4, 5, 6])
    q = hull_facets(vertices(p))
    assert contains(p, q) and contains(q, p)


def test_support_and_errors():
    p = box_polytope([1, 1], [2, 3])
    assert support(p, [1, 1]) == pytest.approx(5.0)
    with pytest.raises(EmptyPolytopeError):
        support(HPolytope([[1.0], [-1.0]], [0.0, -1.0]), [1.0])
    with pytest.raises(UnboundedPolytopeError):
        support(HPolytope([[1.0, 0.0]], [1.0]), [0.0, 1.0])
    assert is_empty(HPolytope([[1.0], [-1.0]], [0.0, -1.0]))


def test_vertices_guard():
    with pytest.raises(ValueError, match="oracle limited to m <= 3"):
        vertices(box_polytope(np.ones(4), np.ones(4)))
    with pytest.raises(UnboundedPolytopeError):
        vertices(HPolytope([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], [1.0, 1.0, 1.0]))


def test_zero_rows_rejected():
    with pytest.raises(ValueError):
        HPolytope([[0.0, 0.0]], [1.0])


def test_chebyshev_center_of_box():
    x, r = chebyshev_center(box_polytope([0, 1], [2, 1]))
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    assert r == pytest.approx(1.0)


def test_homothet_scale_positive():
    with pytest.raises(ValueError):
        Homothet(0.0, [0.0])


def test_flex_polytope_rows():
    d = derive_linear_model(TclParams(), AmbientProfile(1.0, [32.0, 30.0, 28.0]))
    fp = flex_polytope(d)
    assert fp.combined.n_facets == 12
    assert fp.x_poly.n_facets == 6
    # zero deviation is admissible when the device starts at its set-point
    assert fp.combined.contains_point(np.zeros(3))
    # full power on every step drives the energy past its upper limit
    assert not fp.combined.contains_point(d.u_plus)


def _random_polygon(r, n=7):
    pts = r.normal(size=(n, 2))
    return hull_facets(VPolytope(pts))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_homothet_sum_equals_vertex_sum(seed):
    r = np.random.default_rng(seed)
    proto = _random_polygon(r)
    hs = [Homothet(r.uniform(0.2, 3), r.normal(size=2)) for _ in range(2)]
    formula = vertices(apply_homothet(minkowski_homothets(hs), proto))
    brute = minkowski_brute(*(vertices(apply_homothet(h, proto)) for h in hs))
    assert same_vertex_set(formula, brute, 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_homothet_moves_vertices(seed):
    r = np.random.default_rng(seed)
    proto = _random_polygon(r)
    h = Homothet(r.uniform(0.2, 3), r.normal(size=2))
    moved = vertices(apply_homothet(h, proto)).vertices
    expected = h.beta * vertices(proto).vertices + h.t
    assert same_vertex_set(VPolytope(moved), VPolytope(expected), 1e-9)


def test_containment_is_directional():
    small = box_polytope([1, 1], [1, 1])
    big = box_polytope([2, 2], [2, 2])
    assert contains(big, small)
    assert not contains(small, big)
