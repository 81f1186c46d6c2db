import numpy as np
import pytest

from dgns.basis import OrthonormalBasis, basis_eval, space_dimension
from dgns.quadrature import triangle_rule


def test_space_dimensions():
    assert [space_dimension(k) for k in range(4)] == [1, 3, 6, 10]


def test_degree_zero_constant():
    pts = np.random.default_rng(1).random((20, 2)) * 0.4
    vals, grads = basis_eval(0, pts)
    assert vals.shape == (20, 1)
    assert np.ptp(vals[:, 0]) < 1e-14  # constant
    assert abs(grads).max() == 0.0
    # unit L2 norm on the reference element
    rule = triangle_rule(2)
    v, _ = basis_eval(0, rule.points)
    assert abs(np.sum(rule.weights * v[:, 0]**2) - 1.0) < 1e-14


@pytest.mark.parametrize("k", [1, 2, 3])
def test_orthonormality(k):
    rule = triangle_rule(2 * k + 2)
    vals, _ = basis_eval(k, rule.points)
    gram = np.einsum("q,qi,qj->ij", rule.weights, vals, vals)
    assert abs(gram - np.eye(vals.shape[1])).max() < 1e-12


def test_degree_one_reproduces_affine():
    rng = np.random.default_rng(2)
    a, b, c = 1.3, -0.7, 2.1
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    vander, _ = basis_eval(1, nodes)
    coeffs = np.linalg.solve(vander, a + b * nodes[:, 0] + c * nodes[:, 1])
    pts = rng.random((50, 2)) * 0.5
    vals, _ = basis_eval(1, pts)
    assert abs(vals @ coeffs - (a + b * pts[:, 0] + c * pts[:, 1])).max() < 1e-13


def test_degree_two_interpolates_x_squared():
    # Vandermonde solve at six unisolvent points, checked at quadrature points
    nodes = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]],
                     dtype=float)
    vander, _ = basis_eval(2, nodes)
    coeffs = np.linalg.solve(vander, nodes[:, 0]**2)
    rule = triangle_rule(4)
    vals, _ = basis_eval(2, rule.points)
    assert abs(vals @ coeffs - rule.points[:, 0]**2).max() < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_monomial_span(k):
    """Projection onto the basis reproduces every monomial of degree <= k."""
    rule = triangle_rule(2 * k + 2)
    vals, _ = basis_eval(k, rule.points)
    for m in range(k + 1):
        for n in range(k + 1 - m):
            target = rule.points[:, 0]**m * rule.points[:, 1]**n
            coeffs = np.einsum("q,q,qi->i", rule.weights, target, vals)
            assert abs(vals @ coeffs - target).max() < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gradient_matches_finite_differences(k):
    rng = np.random.default_rng(3)
    pts = rng.random((30, 2)) * 0.4 + 0.1
    basis = OrthonormalBasis(k)
    grads = basis.grad(pts)
    h = 1e-6
    for d, step in enumerate((np.array([h, 0.0]), np.array([0.0, h]))):
        fd = (basis.eval(pts + step) - basis.eval(pts - step)) / (2 * h)
        assert abs(fd - grads[:, :, d]).max() < 1e-6


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        OrthonormalBasis(-1)
