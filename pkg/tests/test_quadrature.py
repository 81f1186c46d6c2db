import numpy as np
import pytest

from dgns.quadrature import (edge_rule, reference_monomial_integral,
                             triangle_rule)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 6, 8, 10, 12])
def test_triangle_weights_sum_to_area(degree):
    rule = triangle_rule(degree)
    assert abs(rule.weights.sum() - 0.5) < 1e-14
    assert np.all(rule.weights > 0)


def test_degree_one_is_centroid_rule():
    rule = triangle_rule(1)
    assert rule.points.shape == (1, 2)
    assert np.allclose(rule.points[0], [1 / 3, 1 / 3], atol=1e-14)
    assert abs(rule.weights[0] - 0.5) < 1e-14


def test_edge_degree_three_is_two_point_gauss():
    rule = edge_rule(3)
    nodes = np.sort(rule.points)
    expected = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    assert nodes.shape == (2,)
    assert np.allclose(nodes, expected, atol=1e-15)
    assert np.allclose(rule.weights, 0.5, atol=1e-15)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 7, 10, 12])
def test_triangle_monomial_exactness(degree):
    rule = triangle_rule(degree)
    for m in range(degree + 1):
        for n in range(degree + 1 - m):
            approx = np.sum(rule.weights * rule.points[:, 0]**m * rule.points[:, 1]**n)
            exact = reference_monomial_integral(m, n)
            assert abs(approx - exact) <= 1e-12 * abs(exact)


def test_degree_four_rule_integrates_x2y2():
    rule = triangle_rule(4)
    approx = np.sum(rule.weights * rule.points[:, 0]**2 * rule.points[:, 1]**2)
    assert abs(approx - 1.0 / 180.0) < 1e-15


@pytest.mark.parametrize("degree", [1, 3, 5, 9, 15])
def test_edge_monomial_exactness(degree):
    rule = edge_rule(degree)
    assert abs(rule.weights.sum() - 1.0) < 1e-14
    for m in range(degree + 1):
        approx = np.sum(rule.weights * rule.points**m)
        assert abs(approx - 1.0 / (m + 1)) <= 1e-13


def test_unsupported_degree_rejected():
    with pytest.raises(ValueError):
        triangle_rule(41)
    with pytest.raises(ValueError):
        edge_rule(-1)
