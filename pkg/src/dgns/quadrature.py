"""Quadrature rules on the reference triangle and the reference edge.

Triangle rules are collapsed Gauss-Legendre x Gauss-Jacobi product rules on
the unit reference triangle {(x, y): x >= 0, y >= 0, x + y <= 1}; a rule
built for exactness degree q integrates every polynomial of total degree
<= q exactly and has strictly positive weights.  Edge rules are plain
Gauss-Legendre on the reference interval [0, 1].
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MAX_DEGREE = 40


@dataclass(frozen=True)
class QuadratureRule:
    """Point set with weights and the polynomial degree it integrates exactly."""

    points: np.ndarray  # (npts, 2) for triangles, (npts,) for edges
    weights: np.ndarray  # (npts,)
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


def _check_degree(degree):
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (max {MAX_DEGREE})")


def _gauss_01(npts):
    """Gauss-Legendre nodes/weights mapped from [-1, 1] to [0, 1]."""
    x, w = leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(degree: int) -> QuadratureRule:
    """Rule on the reference triangle exact for total degree <= degree.

    Uses the Duffy collapse x = xi*(1 - eta), y = eta with the (1 - eta)
    Jacobian absorbed into a Gauss-Jacobi rule, so an n x n product grid is
    exact for total degree 2n - 1.
    """
    _check_degree(degree)
    n = max(1, (degree + 2) // 2)  # 2n - 1 >= degree
    xi, wxi = _gauss_01(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)  # weight (1 - x) on [-1, 1]
    eta = 0.5 * (xj + 1.0)
    weta = 0.25 * wj  # accounts for both the affine map and (1-x) = 2(1-eta)

    pts = np.empty((n * n, 2))
    wts = np.empty(n * n)
    for a in range(n):
        for b in range(n):
            i = a * n + b
            pts[i, 0] = xi[a] * (1.0 - eta[b])
            pts[i, 1] = eta[b]
            wts[i] = wxi[a] * weta[b]
    return QuadratureRule(pts, wts, degree)


def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for degree <= degree."""
    _check_degree(degree)
    n = max(1, (degree + 2) // 2)
    x, w = _gauss_01(n)
    return QuadratureRule(x, w, degree)


def reference_monomial_integral(m: int, n: int) -> float:
    """Exact integral of x^m y^n over the reference triangle: m! n! / (m+n+2)!."""
    from math import factorial

    return factorial(m) * factorial(n) / factorial(m + n + 2)
