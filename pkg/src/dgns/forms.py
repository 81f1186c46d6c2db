"""Assembly of the discrete bilinear/trilinear forms into sparse operators.

The diffusion form is the interior-penalty form

    a(w, v) = sum_T int_T grad w : grad v
            - sum_e int_e {grad w} n_e . [v]
            + eps * sum_e int_e {grad v} n_e . [w]

with eps = -1 (symmetric, SIPG) or +1 (nonsymmetric, NIPG), the jump penalty
is J0(v, w) = sum_e (sigma_e/|e|) int_e [v].[w], the velocity-pressure
coupling is b(v, q) = -sum_T int_T q div v + sum_e int_e {q} [v].n_e, and the
convection form is the Lesaint-Raviart upwind form

    c^w(w, z, th) = sum_T ( int_T (w.grad z).th
                          + int_{dT-} |{w}.n_T| (z_int - z_ext).th_int )
                  + 1/2 sum_T int_T (div w) z.th
                  - 1/2 sum_e int_e [w].n_e {z.th}

with inflow set dT- = {x in dT : {w}.n_T < 0} decided pointwise at edge
quadrature nodes and the exterior trace on the domain boundary given by the
Dirichlet data (zero for homogeneous problems).

All sums over edges run over interior and boundary edges alike; on boundary
edges jump and average both mean the trace.  Matrix entry (i, j) is the form
evaluated with trial function j and test function i.  Assembly order is
element index then edge index, so matrices are reproducible bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .kernels import get_backend
from .mesh import Mesh, jump_average_frames
from .quadrature import edge_rule, triangle_rule
from .space import BrokenField, BrokenSpace


@dataclass(frozen=True)
class FormConfig:
    """Switches of the viscous forms: eps (+1 NIPG / -1 SIPG), penalty, viscosity."""

    eps: int = -1
    sigma: float = 10.0
    mu: float = 1.0

    def __post_init__(self):
        if self.eps not in (-1, 1):
            raise ValueError("eps must be -1 (SIPG) or +1 (NIPG)")
        if self.sigma <= 0:
            raise ValueError("penalty parameter must be positive")
        if self.mu <= 0:
            raise ValueError("viscosity must be positive")


class AssemblyContext:
    """Precomputed basis/trace tables for one mesh and one velocity/pressure pair.

    Volume rules default to exactness 3k+1 and edge rules to 3k+2, which
    integrate every form above exactly for degree-k velocities; pass explicit
    degrees (e.g. 10) for error integration against smooth exact solutions.
    """

    def __init__(self, mesh: Mesh, vel_space: BrokenSpace, pres_space: BrokenSpace = None,
                 vol_degree: int = None, edge_degree: int = None):
        if vel_space.mesh is not mesh or (pres_space is not None and pres_space.mesh is not mesh):
            raise ValueError("spaces must live on the given mesh")
        k = vel_space.degree
        self.mesh = mesh
        self.vel_space = vel_space
        self.pres_space = pres_space
        self.vol_rule = triangle_rule(3 * k + 1 if vol_degree is None else vol_degree)
        self.edge_rule = edge_rule(3 * k + 2 if edge_degree is None else edge_degree)

        nt = mesh.num_triangles
        elems = np.arange(nt)

        # volume tables
        self.phi = vel_space.basis.eval(self.vol_rule.points)
        dphi_ref = vel_space.basis.grad(self.vol_rule.points)
        # physical gradient: B^{-T} @ reference gradient
        self.dphi = np.einsum("edc,qjd->eqjc", mesh.elem_map_inv, dphi_ref)
        self.vol_points = mesh.physical_coords(elems, self.vol_rule.points)

        # edge tables (owner side M, neighbor side N; N tables are zero on
        # boundary edges)
        frames = jump_average_frames(mesh, self.edge_rule.points)
        self.edge_points = frames.physical
        ne, nqe = frames.physical.shape[:2]
        self.interior = mesh.edge_is_interior
        owner = mesh.edge_elements[:, 0]
        neighbor = mesh.edge_elements[:, 1]

        self.phi_m, gm = self._trace_tables(vel_space, frames.ref_owner, owner)
        self.gn_m = np.einsum("eqjc,ec->eqj", gm, mesh.edge_normals)
        self.phi_n = np.zeros_like(self.phi_m)
        self.gn_n = np.zeros_like(self.gn_m)
        if self.interior.any():
            ref_n = frames.ref_neighbor[self.interior]
            pn, gn = self._trace_tables(vel_space, ref_n, neighbor[self.interior])
            self.phi_n[self.interior] = pn
            self.gn_n[self.interior] = np.einsum(
                "eqjc,ec->eqj", gn, mesh.edge_normals[self.interior])

        if pres_space is not None:
            self.psi = pres_space.basis.eval(self.vol_rule.points)
            self.psi_m, _ = self._trace_tables(pres_space, frames.ref_owner, owner)
            self.psi_n = np.zeros_like(self.psi_m)
            if self.interior.any():
                pn, _ = self._trace_tables(
                    pres_space, frames.ref_neighbor[self.interior], neighbor[self.interior])
                self.psi_n[self.interior] = pn

    def _trace_tables(self, space, ref_pts, elems):
        ne, nq = ref_pts.shape[:2]
        flat = ref_pts.reshape(-1, 2)
        vals = space.basis.eval(flat).reshape(ne, nq, -1)
        grads_ref = space.basis.grad(flat).reshape(ne, nq, -1, 2)
        inv = self.mesh.elem_map_inv[elems]  # (ne, 2, 2)
        grads = np.einsum("edc,eqjd->eqjc", inv, grads_ref)
        return vals, grads

    # -- field evaluation on the tables ------------------------------------

    def field_coeffs(self, w):
        coeffs = w.coeffs if isinstance(w, BrokenField) else np.asarray(w, dtype=float)
        return self.vel_space.coeff_view(coeffs)

    def velocity_at_volume(self, w):
        return np.einsum("ecj,qj->eqc", self.field_coeffs(w), self.phi)

    def velocity_divergence_at_volume(self, w):
        return np.einsum("ecj,eqjc->eq", self.field_coeffs(w), self.dphi)

    def velocity_traces(self, w):
        """Owner and neighbor traces at edge quadrature points, (ne, nq, 2)."""
        local = self.field_coeffs(w)
        owner = self.mesh.edge_elements[:, 0]
        neighbor = self.mesh.edge_elements[:, 1]
        w_m = np.einsum("ecj,eqj->eqc", local[owner], self.phi_m)
        w_n = np.zeros_like(w_m)
        if self.interior.any():
            w_n[self.interior] = np.einsum(
                "ecj,eqj->eqc", local[neighbor[self.interior]], self.phi_n[self.interior])
        return w_m, w_n

    def boundary_values(self, g):
        """Dirichlet data at edge quadrature points; zero rows on interior edges."""
        gvals = np.zeros(self.edge_points.shape[:2] + (2,))
        bdry = ~self.interior
        if g is not None and bdry.any():
            pts = self.edge_points[bdry].reshape(-1, 2)
            vals = np.asarray(g(pts), dtype=float)
            gvals[bdry] = vals.reshape(-1, self.edge_points.shape[1], 2)
        return gvals


# -- triplet scatter helpers ------------------------------------------------

def _block_triplets(blocks, row_elems, col_elems, row_dim, col_dim):
    nb = blocks.shape[0]
    i = np.arange(row_dim)
    j = np.arange(col_dim)
    rows = (row_elems[:, None, None] * row_dim + i[None, :, None])
    cols = (col_elems[:, None, None] * col_dim + j[None, None, :])
    rows = np.broadcast_to(rows, (nb, row_dim, col_dim))
    cols = np.broadcast_to(cols, (nb, row_dim, col_dim))
    return rows.ravel(), cols.ravel(), blocks.ravel()


def _scalar_edge_triplets(ctx, mm, mn, nm, nn, dk):
    em = ctx.mesh.edge_elements[:, 0]
    en = ctx.mesh.edge_elements[:, 1]
    ii = ctx.interior
    parts = [_block_triplets(mm, em, em, dk, dk)]
    if ii.any():
        parts.append(_block_triplets(mn[ii], em[ii], en[ii], dk, dk))
        parts.append(_block_triplets(nm[ii], en[ii], em[ii], dk, dk))
        parts.append(_block_triplets(nn[ii], en[ii], en[ii], dk, dk))
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return rows, cols, vals


def _vector_expand(rows, cols, vals, dk):
    """Duplicate scalar-layout triplets into both velocity components."""
    er, ir = rows // dk, rows % dk
    ec, ic = cols // dk, cols % dk
    base_r = er * 2 * dk + ir
    base_c = ec * 2 * dk + ic
    out_rows = np.concatenate([base_r, base_r + dk])
    out_cols = np.concatenate([base_c, base_c + dk])
    out_vals = np.concatenate([vals, vals])
    return out_rows, out_cols, out_vals


def _vector_csr(ctx, rows, cols, vals):
    n = ctx.vel_space.num_dofs
    dk = ctx.vel_space.local_dim
    r, c, v = _vector_expand(rows, cols, vals, dk)
    return sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()


# -- operators ---------------------------------------------------------------

def assemble_mass(ctx: AssemblyContext) -> sp.csr_matrix:
    """Velocity mass matrix; block diagonal and SPD."""
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    local = kern.mass_local(ctx.phi, ctx.vol_rule.weights, ctx.mesh.elem_det)
    elems = np.arange(ctx.mesh.num_triangles)
    rows, cols, vals = _block_triplets(local, elems, elems, dk, dk)
    return _vector_csr(ctx, rows, cols, vals)


def assemble_broken_gradient(ctx: AssemblyContext) -> sp.csr_matrix:
    """Gram matrix of the broken H1 seminorm (volume gradients only)."""
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    local = kern.stiffness_local(ctx.dphi, ctx.vol_rule.weights, ctx.mesh.elem_det)
    elems = np.arange(ctx.mesh.num_triangles)
    rows, cols, vals = _block_triplets(local, elems, elems, dk, dk)
    return _vector_csr(ctx, rows, cols, vals)


def assemble_diffusion(ctx: AssemblyContext, config: FormConfig) -> sp.csr_matrix:
    """Interior-penalty diffusion operator a(., .) including boundary edges."""
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    elems = np.arange(ctx.mesh.num_triangles)
    vol = kern.stiffness_local(ctx.dphi, ctx.vol_rule.weights, ctx.mesh.elem_det)
    r0, c0, v0 = _block_triplets(vol, elems, elems, dk, dk)
    mm, mn, nm, nn = kern.diffusion_edge_blocks(
        ctx.phi_m, ctx.phi_n, ctx.gn_m, ctx.gn_n, ctx.edge_rule.weights,
        ctx.mesh.edge_lengths, ctx.interior, float(config.eps))
    r1, c1, v1 = _scalar_edge_triplets(ctx, mm, mn, nm, nn, dk)
    return _vector_csr(ctx, np.concatenate([r0, r1]), np.concatenate([c0, c1]),
                       np.concatenate([v0, v1]))


def assemble_penalty(ctx: AssemblyContext, sigma: float) -> sp.csr_matrix:
    """Jump penalty J0; symmetric positive semidefinite."""
    if sigma <= 0:
        raise ValueError("penalty parameter must be positive")
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    mm, mn, nm, nn = kern.penalty_edge_blocks(
        ctx.phi_m, ctx.phi_n, ctx.edge_rule.weights, ctx.interior, float(sigma))
    rows, cols, vals = _scalar_edge_triplets(ctx, mm, mn, nm, nn, dk)
    return _vector_csr(ctx, rows, cols, vals)


def assemble_pressure_coupling(ctx: AssemblyContext) -> sp.csr_matrix:
    """Coupling matrix B with entry (i, j) = b(velocity basis j, pressure basis i)."""
    if ctx.pres_space is None:
        raise ValueError("context was built without a pressure space")
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    dkp = ctx.pres_space.local_dim
    mesh = ctx.mesh
    elems = np.arange(mesh.num_triangles)

    vol = kern.coupling_volume_local(ctx.psi, ctx.dphi, ctx.vol_rule.weights,
                                     mesh.elem_det)
    mm, mn, nm, nn = kern.coupling_edge_blocks(
        ctx.psi_m, ctx.psi_n, ctx.phi_m, ctx.phi_n, mesh.edge_normals,
        ctx.edge_rule.weights, mesh.edge_lengths, ctx.interior)

    em = mesh.edge_elements[:, 0]
    en = mesh.edge_elements[:, 1]
    ii = ctx.interior
    pieces = [(vol, elems, elems), (mm, em, em)]
    if ii.any():
        pieces += [(mn[ii], em[ii], en[ii]), (nm[ii], en[ii], em[ii]),
                   (nn[ii], en[ii], en[ii])]

    rows_list, cols_list, vals_list = [], [], []
    i = np.arange(dkp)
    j = np.arange(dk)
    for blocks, pe, ve in pieces:
        nb = blocks.shape[0]
        rows = np.broadcast_to(pe[:, None, None, None] * dkp + i[None, :, None, None],
                               (nb, dkp, dk, 2))
        cols = (ve[:, None, None, None] * 2 * dk
                + np.arange(2)[None, None, None, :] * dk
                + j[None, None, :, None])
        cols = np.broadcast_to(cols, (nb, dkp, dk, 2))
        rows_list.append(rows.ravel())
        cols_list.append(cols.ravel())
        vals_list.append(blocks.ravel())
    return sp.coo_matrix(
        (np.concatenate(vals_list), (np.concatenate(rows_list), np.concatenate(cols_list))),
        shape=(ctx.pres_space.num_dofs, ctx.vel_space.num_dofs)).tocsr()


def assemble_convection(ctx: AssemblyContext, w, boundary_data=None):
    """Upwind convection operator z -> c^w(w, z, .) and its boundary load.

    The load collects the inflow contributions of the exterior trace
    z_ext = boundary_data (it belongs on the right-hand side); it is zero
    when boundary_data is None.
    """
    kern = get_backend()
    dk = ctx.vel_space.local_dim
    mesh = ctx.mesh
    elems = np.arange(mesh.num_triangles)

    wvals = ctx.velocity_at_volume(w)
    wdiv = ctx.velocity_divergence_at_volume(w)
    w_m, w_n = ctx.velocity_traces(w)
    gvals = ctx.boundary_values(boundary_data)

    vol = kern.convection_volume_local(ctx.phi, ctx.dphi, wvals, wdiv,
                                       ctx.vol_rule.weights, mesh.elem_det)
    mm, mn, nm, nn, load_blocks = kern.convection_edge_blocks(
        ctx.phi_m, ctx.phi_n, w_m, w_n, mesh.edge_normals,
        ctx.edge_rule.weights, mesh.edge_lengths, ctx.interior, gvals)

    r0, c0, v0 = _block_triplets(vol, elems, elems, dk, dk)
    r1, c1, v1 = _scalar_edge_triplets(ctx, mm, mn, nm, nn, dk)
    matrix = _vector_csr(ctx, np.concatenate([r0, r1]), np.concatenate([c0, c1]),
                         np.concatenate([v0, v1]))

    load = np.zeros(ctx.vel_space.num_dofs)
    em = mesh.edge_elements[:, 0]
    for c in range(2):
        np.add.at(load, em[:, None] * 2 * dk + c * dk + np.arange(dk)[None, :],
                  load_blocks[:, :, c])
    return matrix, load


def assemble_load(ctx: AssemblyContext, f, t) -> np.ndarray:
    """Source vector with entries (f(t), phi_i)."""
    kern = get_backend()
    mesh = ctx.mesh
    pts = ctx.vol_points.reshape(-1, 2)
    fvals = np.asarray(f(pts, t), dtype=float).reshape(
        mesh.num_triangles, -1, 2)
    blocks = kern.load_local(ctx.phi, fvals, ctx.vol_rule.weights, mesh.elem_det)
    dk = ctx.vel_space.local_dim
    load = np.zeros(ctx.vel_space.num_dofs)
    elems = np.arange(mesh.num_triangles)
    for c in range(2):
        load[(elems[:, None] * 2 * dk + c * dk + np.arange(dk)[None, :]).ravel()] \
            += blocks[:, :, c].ravel()
    return load


def assemble_dirichlet_lift(ctx: AssemblyContext, g, config: FormConfig, w=None) -> np.ndarray:
    """Weak Dirichlet right-hand side for boundary data g.

    Collects mu * (sigma_e/|e|) int_e g.phi (penalty), mu * eps int_e
    {grad phi} n_e . g (consistency) and, when an advecting field w is given,
    the upwind inflow term with exterior trace g.  Zero for g = None or
    g identically zero; only boundary-edge rows are touched.
    """
    dk = ctx.vel_space.local_dim
    lift = np.zeros(ctx.vel_space.num_dofs)
    bdry = ~ctx.interior
    if g is None or not bdry.any():
        return lift
    gvals = ctx.boundary_values(g)[bdry]                     # (nb, nq, 2)
    phi = ctx.phi_m[bdry]                                    # (nb, nq, dk)
    gn = ctx.gn_m[bdry]                                      # (nb, nq, dk)
    wq = ctx.edge_rule.weights
    lengths = ctx.mesh.edge_lengths[bdry]

    # (sigma/|e|) int_e g.phi: the length cancels as in the penalty matrix
    blocks = config.mu * config.sigma * np.einsum("q,eqc,eqi->eic", wq, gvals, phi)
    blocks += config.mu * config.eps * np.einsum(
        "q,e,eqi,eqc->eic", wq, lengths, gn, gvals)

    if w is not None:
        w_m, _ = ctx.velocity_traces(w)
        s = np.einsum("eqc,ec->eq", w_m[bdry], ctx.mesh.edge_normals[bdry])
        inflow = np.where(s < 0.0, -s, 0.0)
        blocks += np.einsum("q,e,eq,eqc,eqi->eic", wq, lengths, inflow, gvals, phi)

    em = ctx.mesh.edge_elements[bdry, 0]
    for c in range(2):
        np.add.at(lift, em[:, None] * 2 * dk + c * dk + np.arange(dk)[None, :],
                  blocks[:, :, c])
    return lift


def assemble_dirichlet_divergence_rhs(ctx: AssemblyContext, g) -> np.ndarray:
    """Mass-equation right-hand side sum_e int_e {psi_i} g.n_e over boundary edges.

    Needed so that fields matching inhomogeneous boundary data satisfy the
    discrete constraint consistently; vanishes whenever g.n = 0 (e.g. the
    moving-lid data).
    """
    if ctx.pres_space is None:
        raise ValueError("context was built without a pressure space")
    rhs = np.zeros(ctx.pres_space.num_dofs)
    bdry = ~ctx.interior
    if g is None or not bdry.any():
        return rhs
    gvals = ctx.boundary_values(g)[bdry]
    gn = np.einsum("eqc,ec->eq", gvals, ctx.mesh.edge_normals[bdry])
    blocks = np.einsum("q,e,eq,eqi->ei", ctx.edge_rule.weights,
                       ctx.mesh.edge_lengths[bdry], gn, ctx.psi_m[bdry])
    dkp = ctx.pres_space.local_dim
    em = ctx.mesh.edge_elements[bdry, 0]
    np.add.at(rhs, em[:, None] * dkp + np.arange(dkp)[None, :], blocks)
    return rhs


def pressure_mean_vector(ctx: AssemblyContext) -> np.ndarray:
    """Vector of pressure basis integrals; m . p is the mean of p times |Omega|."""
    if ctx.pres_space is None:
        raise ValueError("context was built without a pressure space")
    blocks = np.einsum("q,e,qi->ei", ctx.vol_rule.weights, ctx.mesh.elem_det, ctx.psi)
    return blocks.ravel()


def export_matrix_market(path, matrix):
    """Debug dump of an assembled operator in Matrix Market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(path, sp.coo_matrix(matrix))
