"""Manufactured exact solutions and benchmark boundary data.

Both manufactured velocity fields are divergence free, vanish on the unit
square boundary for all times, and carry a multiplicative e^t time factor;
the matching source term is built from hand-coded derivatives as

    f = u_t - mu * lap(u) + (u . grad) u + grad p.
"""

import numpy as np


class ExactSolution:
    """Callable bundle (u, grad u, lap u, u_t, p, grad p) for one test case."""

    def __init__(self, name, velocity, velocity_gradient, velocity_laplacian,
                 pressure, pressure_gradient):
        self.name = name
        self.velocity = velocity
        self.velocity_gradient = velocity_gradient
        self.velocity_laplacian = velocity_laplacian
        self.pressure = pressure
        self.pressure_gradient = pressure_gradient

    def velocity_time_derivative(self, pts, t):
        # both catalog solutions are e^t times a spatial profile
        return self.velocity(pts, t)

    def initial_velocity(self, pts):
        return self.velocity(pts, 0.0)

    def forcing(self, pts, t, mu):
        """Momentum source u_t - mu lap(u) + (u.grad)u + grad p."""
        u = self.velocity(pts, t)
        gu = self.velocity_gradient(pts, t)
        conv = np.einsum("pc,pic->pi", u, gu)
        return (self.velocity_time_derivative(pts, t)
                - mu * self.velocity_laplacian(pts, t)
                + conv
                + self.pressure_gradient(pts, t))


def _split(pts):
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts[:, 0], pts[:, 1]


# -- polynomial case: stream function e^t x^2(x-1)^2 y^2(y-1)^2 --------------

def _poly_parts(s):
    a = s**2 * (s - 1.0) ** 2
    da = 2.0 * s * (s - 1.0) * (2.0 * s - 1.0)
    d2a = 12.0 * s**2 - 12.0 * s + 2.0
    d3a = 24.0 * s - 12.0
    return a, da, d2a, d3a


def _poly_velocity(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    ax, dax, _, _ = _poly_parts(x)
    by, dby, _, _ = _poly_parts(y)
    return np.stack([e * ax * dby, -e * dax * by], axis=1)


def _poly_velocity_gradient(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    ax, dax, d2ax, _ = _poly_parts(x)
    by, dby, d2by, _ = _poly_parts(y)
    g = np.empty((len(x), 2, 2))
    g[:, 0, 0] = e * dax * dby
    g[:, 0, 1] = e * ax * d2by
    g[:, 1, 0] = -e * d2ax * by
    g[:, 1, 1] = -e * dax * dby
    return g


def _poly_velocity_laplacian(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    ax, dax, d2ax, d3ax = _poly_parts(x)
    by, dby, d2by, d3by = _poly_parts(y)
    return np.stack([e * (d2ax * dby + ax * d3by),
                     -e * (d3ax * by + dax * d2by)], axis=1)


def _poly_pressure(pts, t):
    x, y = _split(pts)
    return 2.0 * np.exp(t) * (x - y)


def _poly_pressure_gradient(pts, t):
    x, _ = _split(pts)
    e = np.exp(t)
    g = np.empty((len(x), 2))
    g[:, 0] = 2.0 * e
    g[:, 1] = -2.0 * e
    return g


# -- trigonometric case -------------------------------------------------------

_W = 2.0 * np.pi


def _trig_velocity(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    return np.stack([e * np.sin(_W * y) * (1.0 - np.cos(_W * x)),
                     e * np.sin(_W * x) * (np.cos(_W * y) - 1.0)], axis=1)


def _trig_velocity_gradient(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    sx, cx = np.sin(_W * x), np.cos(_W * x)
    sy, cy = np.sin(_W * y), np.cos(_W * y)
    g = np.empty((len(x), 2, 2))
    g[:, 0, 0] = e * _W * sy * sx
    g[:, 0, 1] = e * _W * cy * (1.0 - cx)
    g[:, 1, 0] = e * _W * cx * (cy - 1.0)
    g[:, 1, 1] = -e * _W * sx * sy
    return g


def _trig_velocity_laplacian(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    sx, cx = np.sin(_W * x), np.cos(_W * x)
    sy, cy = np.sin(_W * y), np.cos(_W * y)
    return np.stack([e * _W**2 * sy * (2.0 * cx - 1.0),
                     -e * _W**2 * sx * (2.0 * cy - 1.0)], axis=1)


def _trig_pressure(pts, t):
    x, y = _split(pts)
    return np.exp(t) * _W * (np.cos(_W * y) - np.cos(_W * x))


def _trig_pressure_gradient(pts, t):
    x, y = _split(pts)
    e = np.exp(t)
    return np.stack([e * _W**2 * np.sin(_W * x),
                     -e * _W**2 * np.sin(_W * y)], axis=1)


POLYNOMIAL_VORTEX = ExactSolution(
    "ex1", _poly_velocity, _poly_velocity_gradient, _poly_velocity_laplacian,
    _poly_pressure, _poly_pressure_gradient)

TRIG_VORTEX = ExactSolution(
    "ex2", _trig_velocity, _trig_velocity_gradient, _trig_velocity_laplacian,
    _trig_pressure, _trig_pressure_gradient)

_CATALOG = {"ex1": POLYNOMIAL_VORTEX, "ex2": TRIG_VORTEX}


def get_example(name: str) -> ExactSolution:
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; available: {sorted(_CATALOG)}") from None


def lid_driven_boundary(pts, lid_y: float = 1.0):
    """Cavity data: (1, 0) on the moving lid, no-slip elsewhere.

    Meant to be evaluated at edge quadrature points, which never hit the lid
    corners, so the discontinuous corner data needs no regularization.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    g = np.zeros_like(pts)
    g[:, 0] = np.where(pts[:, 1] >= lid_y - 1e-12, 1.0, 0.0)
    return g
