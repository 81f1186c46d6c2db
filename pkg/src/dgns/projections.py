"""Constrained projections onto the discretely divergence-free subspace.

Both projections are posed as saddle-point problems on the full velocity
space with a pressure multiplier (the weakly divergence-free subspace is
never formed explicitly) plus the usual zero-mean constraint on the
multiplier:

* project_ph: find (w, lam) with (w, phi) + b(phi, lam) = (v, phi) and
  b(w, q) = 0, the L2 projection onto the constrained subspace.
* project_sh: find (s, lam) with mu (a + J0)(s, phi) + b(phi, lam)
  = mu (a + J0)(u, phi) + b(phi, p) and b(s, q) = b(u, q), the viscous
  projection of an exact pair (u, p).  For boundary-respecting data the
  constraint right side vanishes and s is weakly divergence free; keeping
  b(u, q) there makes the projection reproduce any global polynomial
  solenoidal field exactly.
"""

import numpy as np

from .forms import (AssemblyContext, FormConfig, assemble_diffusion,
                    assemble_mass, assemble_penalty, assemble_pressure_coupling,
                    pressure_mean_vector)
from .solver import SaddleSystem, solve_saddle
from .space import BrokenField, constant_field


def _data_context(ctx: AssemblyContext, degree: int = 10) -> AssemblyContext:
    """High-order twin of an assembly context for integrating smooth data."""
    return AssemblyContext(ctx.mesh, ctx.vel_space, ctx.pres_space,
                           vol_degree=degree, edge_degree=degree)


def _velocity_volume_rhs(data_ctx, values):
    """Vector with entries int_T values . phi_i over all velocity dofs."""
    w = np.einsum("q,e,eqc,qi->eci", data_ctx.vol_rule.weights,
                  data_ctx.mesh.elem_det, values, data_ctx.phi)
    return w.reshape(-1)


def project_ph(ctx: AssemblyContext, fn, t=None, rtol: float = 1e-10) -> BrokenField:
    """Constrained L2 projection of a pointwise velocity field.

    fn(points[, t]) must return (npts, 2) values.  The result satisfies
    b(w, q_h) = 0 for every mean-zero pressure test function, up to the
    solver tolerance.
    """
    data_ctx = _data_context(ctx)
    pts = data_ctx.vol_points.reshape(-1, 2)
    vals = np.asarray(fn(pts) if t is None else fn(pts, t), dtype=float)
    vals = vals.reshape(ctx.mesh.num_triangles, -1, 2)

    system = SaddleSystem(
        K=assemble_mass(ctx),
        B=assemble_pressure_coupling(ctx),
        mean=pressure_mean_vector(ctx),
        rhs_u=_velocity_volume_rhs(data_ctx, vals),
        rhs_p=np.zeros(ctx.pres_space.num_dofs),
        ones_p=constant_field(ctx.pres_space, [1.0]).coeffs,
    )
    w, _, _ = solve_saddle(system, rtol)
    return BrokenField(ctx.vel_space, w)


def _edge_scatter(ctx, blocks_m, blocks_n=None):
    """Accumulate per-edge (nb, nq-summed) dof blocks into a velocity vector."""
    dk = ctx.vel_space.local_dim
    out = np.zeros(ctx.vel_space.num_dofs)
    em = ctx.mesh.edge_elements[:, 0]
    idx = np.arange(dk)[None, :]
    for c in range(2):
        np.add.at(out, em[:, None] * 2 * dk + c * dk + idx, blocks_m[:, :, c])
    if blocks_n is not None:
        ii = ctx.interior
        en = ctx.mesh.edge_elements[ii, 1]
        for c in range(2):
            np.add.at(out, en[:, None] * 2 * dk + c * dk + idx, blocks_n[ii][:, :, c])
    return out


def project_sh(ctx: AssemblyContext, exact, t, form: FormConfig,
               rtol: float = 1e-10) -> BrokenField:
    """Viscous (Stokes-type) projection of the exact pair (u(t), p(t)).

    exact must provide velocity, velocity_gradient and pressure callables.
    The exact velocity gradient enters the consistency edge terms with the
    continuous argument.
    """
    dctx = _data_context(ctx)
    mesh = ctx.mesh
    wq_v = dctx.vol_rule.weights
    wq_e = dctx.edge_rule.weights
    det = mesh.elem_det
    lengths = mesh.edge_lengths
    normals = mesh.edge_normals
    vol_pts = dctx.vol_points.reshape(-1, 2)
    edge_pts = dctx.edge_points.reshape(-1, 2)

    nt, nqv = dctx.vol_points.shape[:2]
    ne, nqe = dctx.edge_points.shape[:2]
    grad_u = exact.velocity_gradient(vol_pts, t).reshape(nt, nqv, 2, 2)
    p_vol = exact.pressure(vol_pts, t).reshape(nt, nqv)
    grad_u_e = exact.velocity_gradient(edge_pts, t).reshape(ne, nqe, 2, 2)
    u_e = exact.velocity(edge_pts, t).reshape(ne, nqe, 2)
    p_e = exact.pressure(edge_pts, t).reshape(ne, nqe)

    mu, eps, sigma = form.mu, float(form.eps), form.sigma
    bdry = ~ctx.interior

    # volume terms: mu grad u : grad phi - p div phi
    rhs = np.einsum("q,e,eqcd,eqid->eci", wq_v, det, grad_u, dctx.dphi).reshape(-1) * mu
    rhs -= np.einsum("q,e,eq,eqic->eci", wq_v, det, p_vol, dctx.dphi).reshape(-1)

    # edge terms on both sides of the jump [phi]
    gun = np.einsum("eqcd,ed->eqc", grad_u_e, normals)          # {grad u} n_e
    w_edge = wq_e[None, :] * lengths[:, None]
    common = -mu * gun + p_e[:, :, None] * normals[:, None, :]  # -mu{grad u}n + {p}n
    blocks_m = np.einsum("eq,eqc,eqi->eic", w_edge, common, dctx.phi_m)
    blocks_n = -np.einsum("eq,eqc,eqi->eic", w_edge, common, dctx.phi_n)
    rhs += _edge_scatter(dctx, blocks_m, blocks_n)

    # boundary-only terms carrying the trace of u: eps-consistency and penalty
    bm = np.zeros_like(blocks_m)
    bm[bdry] = mu * eps * np.einsum(
        "eq,eqi,eqc->eic", w_edge[bdry], dctx.gn_m[bdry], u_e[bdry])
    bm[bdry] += mu * sigma * np.einsum(
        "q,eqc,eqi->eic", wq_e, u_e[bdry], dctx.phi_m[bdry])
    rhs += _edge_scatter(dctx, bm)

    # constraint data b(u, q): volume divergence plus boundary normal flux
    div_u = grad_u[:, :, 0, 0] + grad_u[:, :, 1, 1]
    rhs_p = -np.einsum("q,e,eq,qi->ei", wq_v, det, div_u, dctx.psi).reshape(-1)
    un = np.einsum("eqc,ec->eq", u_e[bdry], normals[bdry])
    pblocks = np.einsum("eq,eq,eqi->ei", w_edge[bdry], un, dctx.psi_m[bdry])
    dkp = ctx.pres_space.local_dim
    em = mesh.edge_elements[bdry, 0]
    np.add.at(rhs_p, (em[:, None] * dkp + np.arange(dkp)[None, :]).ravel(),
              pblocks.ravel())

    A = assemble_diffusion(ctx, form)
    J = assemble_penalty(ctx, form.sigma)
    system = SaddleSystem(
        K=(mu * (A + J)).tocsr(),
        B=assemble_pressure_coupling(ctx),
        mean=pressure_mean_vector(ctx),
        rhs_u=rhs,
        rhs_p=rhs_p,
        ones_p=constant_field(ctx.pres_space, [1.0]).coeffs,
    )
    s, _, _ = solve_saddle(system, rtol)
    return BrokenField(ctx.vel_space, s)
