"""Broken (fully discontinuous) polynomial spaces and their fields.

Degrees of freedom are laid out element-major: for a space with c components
and d_k local basis functions, the coefficient of basis j, component comp on
element e sits at index e*(c*d_k) + comp*d_k + j.
"""

import numpy as np

from .basis import OrthonormalBasis
from .mesh import Mesh
from .quadrature import triangle_rule


class BrokenSpace:
    """Piecewise-polynomial space of degree k with no interelement continuity."""

    def __init__(self, mesh: Mesh, degree: int, components: int = 1):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        if components not in (1, 2):
            raise ValueError("only scalar and 2-vector spaces are supported")
        self.mesh = mesh
        self.degree = degree
        self.components = components
        self.basis = OrthonormalBasis(degree)
        self.local_dim = self.basis.dim
        self.num_dofs = components * self.local_dim * mesh.num_triangles

    def coeff_view(self, coeffs):
        """Reshape a flat coefficient vector to (nt, components, local_dim)."""
        return np.asarray(coeffs).reshape(
            self.mesh.num_triangles, self.components, self.local_dim)

    def new_field(self, coeffs=None):
        if coeffs is None:
            coeffs = np.zeros(self.num_dofs)
        return BrokenField(self, coeffs)


class BrokenField:
    """Coefficient vector over a broken space."""

    def __init__(self, space: BrokenSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        if coeffs.size != space.num_dofs:
            raise ValueError(
                f"expected {space.num_dofs} coefficients, got {coeffs.size}")
        self.space = space
        self.coeffs = coeffs

    def eval(self, points):
        """Field values at physical points; shape (npts, components).

        Points are assigned to elements by the structured locator, so values
        on mesh lines come from the left/lower element.
        """
        space = self.space
        mesh = space.mesh
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        elems = mesh.locate(pts)
        ref = mesh.reference_coords(elems, pts)
        phi = space.basis.eval(ref)  # (npts, dk)
        local = space.coeff_view(self.coeffs)[elems]  # (npts, comp, dk)
        return np.einsum("pcj,pj->pc", local, phi)

    def eval_at_reference(self, phi_table):
        """Values at shared reference points on every element.

        phi_table is (nq, dk) basis values; returns (nt, nq, components).
        """
        local = self.space.coeff_view(self.coeffs)
        return np.einsum("ecj,qj->eqc", local, phi_table)

    def copy(self):
        return BrokenField(self.space, self.coeffs.copy())


def project_l2(space: BrokenSpace, fn, t=None, quad_degree: int = 10) -> BrokenField:
    """Element-by-element L2 projection of a pointwise function.

    fn(points[, t]) must return (npts, components) values at physical points.
    The local mass solve uses the orthonormal reference basis, so it only
    rescales by the element Jacobian.
    """
    mesh = space.mesh
    rule = triangle_rule(quad_degree)
    phi = space.basis.eval(rule.points)  # (nq, dk)
    phys = mesh.physical_coords(np.arange(mesh.num_triangles), rule.points)
    vals = _eval_pointwise(fn, phys.reshape(-1, 2), t, space.components)
    vals = vals.reshape(mesh.num_triangles, len(rule.weights), space.components)

    # rhs_i = int_T f phi_i; the element Jacobian cancels against the local
    # mass matrix detJ * M_ref, so only the reference-rule sums remain
    rhs = np.einsum("q,eqc,qj->ecj", rule.weights, vals, phi)
    mass = np.einsum("q,qi,qj->ij", rule.weights, phi, phi)
    try:
        local = np.linalg.solve(mass, rhs.reshape(-1, space.local_dim).T).T
    except np.linalg.LinAlgError as exc:  # unreachable for a valid basis
        raise RuntimeError("internal error: singular local mass matrix") from exc
    return BrokenField(space, local.reshape(-1))


def interpolate_lagrange(space: BrokenSpace, fn, t=None) -> BrokenField:
    """Elementwise Lagrange interpolation at the principal lattice points.

    For degree k the lattice (i/k, j/k), i + j <= k, is unisolvent for P_k;
    for k = 1 this is interpolation at the triangle vertices.
    """
    k = space.degree
    if k == 0:
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
    else:
        pts = np.array([[i / k, j / k]
                        for d in range(k + 1) for j in range(d + 1) for i in [d - j]])
    vander = space.basis.eval(pts)  # (npts, dk) square by construction
    mesh = space.mesh
    phys = mesh.physical_coords(np.arange(mesh.num_triangles), pts)
    vals = _eval_pointwise(fn, phys.reshape(-1, 2), t, space.components)
    vals = vals.reshape(mesh.num_triangles, len(pts), space.components)
    coeffs = np.linalg.solve(vander, vals.reshape(-1, len(pts), space.components)
                             .transpose(1, 0, 2).reshape(len(pts), -1))
    local = coeffs.reshape(len(pts), mesh.num_triangles, space.components)
    return BrokenField(space, local.transpose(1, 2, 0).reshape(-1))


def constant_field(space: BrokenSpace, values) -> BrokenField:
    """Representation of a globally constant function in the space."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size != space.components:
        raise ValueError("one value per component required")
    # the constant reference basis function has value sqrt(2)
    local = np.zeros((space.mesh.num_triangles, space.components, space.local_dim))
    local[:, :, 0] = values[None, :] / np.sqrt(2.0)
    return BrokenField(space, local.reshape(-1))


def _eval_pointwise(fn, pts, t, components):
    vals = fn(pts) if t is None else fn(pts, t)
    vals = np.asarray(vals, dtype=float)
    if components == 1 and vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape != (len(pts), components):
        raise ValueError(
            f"function returned shape {vals.shape}, expected {(len(pts), components)}")
    return vals
