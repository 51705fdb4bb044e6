import math

import numpy as np
import pytest

from simplex_neumann.quadrature import gauss_legendre, points_for_wavenumber


def simplex_monomial(exponents):
    # int over the reference simplex of prod x_i^a_i = prod a_i! / (sum a + d)!
    d = len(exponents)
    return math.prod(math.factorial(a) for a in exponents) / math.factorial(sum(exponents) + d)


def exponent_tuples(dim, degree):
    if dim == 1:
        return [(a,) for a in range(degree + 1)]
    out = []
    for a in range(degree + 1):
        out += [(a, *rest) for rest in exponent_tuples(dim - 1, degree - a)]
    return out


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("npts", [2, 5, 12])
def test_weights_sum_to_reference_measure(dim, npts):
    rule = gauss_legendre(npts, dim)
    assert abs(rule.weights.sum() - 1 / math.factorial(dim)) < 1e-14
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("npts", [2, 4, 7])
def test_exact_up_to_order(dim, npts):
    rule = gauss_legendre(npts, dim)
    for exps in exponent_tuples(dim, rule.order):
        approx = rule.weights @ np.prod(rule.nodes ** np.array(exps), axis=1)
        assert approx == pytest.approx(simplex_monomial(exps), abs=1e-12)


def test_order_is_sharp_in_1d():
    rule = gauss_legendre(3, 1)
    exps = (rule.order + 1,)
    approx = rule.weights @ rule.nodes[:, 0] ** exps[0]
    assert abs(approx - simplex_monomial(exps)) > 1e-8


def test_map_to_embedded_face():
    rule = gauss_legendre(6, 2)
    face = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    x, w = rule.map_to(face)
    assert w.sum() == pytest.approx(math.sqrt(3) / 2, rel=1e-14)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-15)
    # centroid of the face
    np.testing.assert_allclose(w @ x / w.sum(), np.full(3, 1 / 3), atol=1e-14)


def test_map_to_rejects_wrong_vertex_count():
    with pytest.raises(ValueError):
        gauss_legendre(3, 2).map_to(np.zeros((4, 3)))


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        gauss_legendre(3, 4)


def test_too_few_points_for_tetrahedron():
    with pytest.raises(ValueError):
        gauss_legendre(1, 3)


def test_points_heuristic():
    assert points_for_wavenumber(3) == 22
