"""Orthonormal polynomial bases on the reference triangle.

The basis of degree k spans P_k and is orthonormalized against the exact
monomial moments of the reference triangle (Gram-Schmidt via Cholesky), so
the reference mass matrix is the identity and local mass matrices on affine
elements are scaled identities.
"""

import numpy as np

from .quadrature import reference_monomial_integral


def space_dimension(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def monomial_exponents(k: int) -> np.ndarray:
    """Exponent pairs (a, b) of the monomials x^a y^b, graded by total degree."""
    exps = []
    for d in range(k + 1):
        for b in range(d + 1):
            exps.append((d - b, b))
    return np.array(exps, dtype=np.int64)


class OrthonormalBasis:
    """L2-orthonormal basis of P_k on the reference triangle."""

    def __init__(self, k: int):
        if k < 0:
            raise ValueError("polynomial degree must be nonnegative")
        self.degree = k
        self.exponents = monomial_exponents(k)
        dk = len(self.exponents)
        gram = np.empty((dk, dk))
        for i, (a, b) in enumerate(self.exponents):
            for j, (c, d) in enumerate(self.exponents):
                gram[i, j] = reference_monomial_integral(a + c, b + d)
        # rows of inv(L) give orthonormal combinations of the monomials
        lower = np.linalg.cholesky(gram)
        self.coeffs = np.linalg.solve(lower, np.eye(dk))
        self.dim = dk

    def _monomial_table(self, pts, dx=0, dy=0):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        table = np.empty((len(pts), self.dim))
        for j, (a, b) in enumerate(self.exponents):
            fa, ea = _diff_power(a, dx)
            fb, eb = _diff_power(b, dy)
            table[:, j] = fa * fb * x**ea * y**eb
        return table

    def eval(self, pts) -> np.ndarray:
        """Basis values, shape (npts, dim)."""
        return self._monomial_table(pts) @ self.coeffs.T

    def grad(self, pts) -> np.ndarray:
        """Reference gradients, shape (npts, dim, 2)."""
        gx = self._monomial_table(pts, dx=1) @ self.coeffs.T
        gy = self._monomial_table(pts, dy=1) @ self.coeffs.T
        return np.stack([gx, gy], axis=-1)


def _diff_power(p, order):
    """Factor and exponent of d^order/dx^order x^p."""
    factor = 1.0
    for _ in range(order):
        factor *= p
        p = max(p - 1, 0)
    return factor, p


def basis_eval(k: int, ref_points):
    """Values and reference gradients of the degree-k basis at given points.

    Returns (values, gradients) with shapes (npts, d_k) and (npts, d_k, 2).
    """
    basis = OrthonormalBasis(k)
    return basis.eval(ref_points), basis.grad(ref_points)
