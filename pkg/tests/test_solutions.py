import numpy as np
import pytest

from dgns.quadrature import triangle_rule
from dgns.solutions import get_example, lid_driven_boundary


@pytest.fixture(params=["ex1", "ex2"])
def example(request):
    return get_example(request.param)


def test_catalog_lookup():
    assert get_example("ex1").name == "ex1"
    with pytest.raises(KeyError):
        get_example("ex99")


def test_divergence_free_pointwise(example, rng):
    pts = rng.random((200, 2))
    for t in (0.0, 0.37, 1.0):
        g = example.velocity_gradient(pts, t)
        div = g[:, 0, 0] + g[:, 1, 1]
        scale = max(1.0, abs(g).max())
        assert abs(div).max() <= 1e-12 * scale


def test_zero_boundary_trace(example, rng):
    s = rng.random(50)
    sides = [np.column_stack([s, np.zeros(50)]),
             np.column_stack([s, np.ones(50)]),
             np.column_stack([np.zeros(50), s]),
             np.column_stack([np.ones(50), s])]
    for pts in sides:
        for t in (0.0, 1.0):
            vals = example.velocity(pts, t)
            assert abs(vals).max() <= 1e-12 * max(1.0, np.e)


def test_pressure_mean_zero(example):
    from dgns.mesh import build_uniform_mesh

    rule = triangle_rule(12)
    mesh = build_uniform_mesh(8)
    pts = mesh.physical_coords(np.arange(mesh.num_triangles), rule.points)
    vals = example.pressure(pts.reshape(-1, 2), 1.0).reshape(mesh.num_triangles, -1)
    total = np.einsum("q,e,eq->", rule.weights, mesh.elem_det, vals)
    assert abs(total) < 1e-10


def test_time_dependence_is_exponential(example, rng):
    pts = rng.random((20, 2))
    v0 = example.velocity(pts, 0.0)
    v1 = example.velocity(pts, 1.0)
    assert abs(v1 - np.e * v0).max() <= 1e-12 * max(1.0, abs(v1).max())
    assert abs(example.velocity_time_derivative(pts, 1.0) - v1).max() == 0.0


def test_gradient_matches_finite_differences(example, rng):
    pts = rng.random((50, 2)) * 0.9 + 0.05
    h = 1e-6
    g = example.velocity_gradient(pts, 0.5)
    for d, step in enumerate((np.array([h, 0.0]), np.array([0.0, h]))):
        fd = (example.velocity(pts + step, 0.5)
              - example.velocity(pts - step, 0.5)) / (2 * h)
        assert abs(fd - g[:, :, d]).max() < 1e-6


def test_laplacian_matches_finite_differences(example, rng):
    pts = rng.random((30, 2)) * 0.8 + 0.1
    h = 1e-4
    lap = example.velocity_laplacian(pts, 0.3)
    fd = np.zeros_like(lap)
    for step in (np.array([h, 0.0]), np.array([0.0, h])):
        fd += (example.velocity(pts + step, 0.3) - 2 * example.velocity(pts, 0.3)
               + example.velocity(pts - step, 0.3)) / h**2
    assert abs(fd - lap).max() < 1e-5 * max(1.0, abs(lap).max())


def test_forcing_matches_finite_difference_oracle():
    """The anti-typo check: f = u_t - mu lap u + (u.grad)u + grad p."""
    from dgns.verification import check_forcing_residual

    result = check_forcing_residual(np.random.default_rng(0))
    assert result.passed, result.line()


def test_lid_boundary_data():
    pts = np.array([[0.5, 1.0], [0.25, 1.0], [0.5, 0.0], [0.0, 0.5], [1.0, 0.3]])
    g = lid_driven_boundary(pts)
    assert np.allclose(g[0], [1.0, 0.0])
    assert np.allclose(g[1], [1.0, 0.0])
    assert abs(g[2:]).max() == 0.0
