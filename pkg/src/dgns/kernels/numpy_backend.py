"""Vectorized numpy implementations of the local assembly kernels.

Every kernel returns dense per-element or per-edge blocks; scattering into
sparse triplets happens in the forms module.  Conventions: the jump across
an edge is owner-minus-neighbor, averages carry weight 1/2 on interior edges
and reduce to the owner trace on boundary edges, and entry (i, j) couples
test function i with trial function j.
"""

import numpy as np

NAME = "numpy"


def mass_local(phi, wq, det):
    # phi (nq, dk), det (nt,)
    ref = np.einsum("q,qi,qj->ij", wq, phi, phi)
    return det[:, None, None] * ref[None, :, :]


def stiffness_local(dphi, wq, det):
    # dphi (nt, nq, dk, 2) physical gradients
    return np.einsum("q,e,eqic,eqjc->eij", wq, det, dphi, dphi)


def load_local(phi, fvals, wq, det):
    # fvals (nt, nq, ncomp) -> (nt, dk, ncomp)
    return np.einsum("q,e,eqc,qi->eic", wq, det, fvals, phi)


def diffusion_edge_blocks(phi_m, phi_n, gn_m, gn_n, wq, lengths, interior, eps):
    """Consistency/symmetry edge terms of the interior-penalty diffusion form.

    gn_m / gn_n hold grad(phi) . n_e traces from either side.  Returns the
    four coupling blocks (mm, mn, nm, nn), each (ne, dk, dk).
    """
    w = wq[None, :] * lengths[:, None]  # (ne, nq)
    avg_m = np.where(interior, 0.5, 1.0)[:, None] * w
    avg_n = np.where(interior, 0.5, 0.0)[:, None] * w

    def pair(weight, gn, ph):
        # entry (i, j) = sum_q weight * gn_j * ph_i
        return np.einsum("eq,eqj,eqi->eij", weight, gn, ph)

    # -{grad phi_j . n}[phi_i] + eps {grad phi_i . n}[phi_j]
    gmm = pair(avg_m, gn_m, phi_m)
    gnn = pair(avg_n, gn_n, phi_n)
    mm = -gmm + eps * gmm.transpose(0, 2, 1)
    mn = -pair(avg_n, gn_n, phi_m) - eps * pair(avg_m, gn_m, phi_n).transpose(0, 2, 1)
    nm = pair(avg_m, gn_m, phi_n) + eps * pair(avg_n, gn_n, phi_m).transpose(0, 2, 1)
    nn = gnn - eps * gnn.transpose(0, 2, 1)
    return mm, mn, nm, nn


def penalty_edge_blocks(phi_m, phi_n, wq, interior, sigma):
    """Jump penalty (sigma/|e|) int_e [phi_j][phi_i]; the edge length cancels."""
    w = sigma * wq[None, :]
    w = np.broadcast_to(w, phi_m.shape[:2])
    mm = np.einsum("eq,eqi,eqj->eij", w, phi_m, phi_m)
    mn = -np.einsum("eq,eqi,eqj->eij", w, phi_m, phi_n)
    nm = -np.einsum("eq,eqi,eqj->eij", w, phi_n, phi_m)
    nn = np.einsum("eq,eqi,eqj->eij", w, phi_n, phi_n)
    return mm, mn, nm, nn


def coupling_volume_local(psi, dphi, wq, det):
    """Volume part -int_T psi_i d_c phi_j of the velocity-pressure form."""
    return -np.einsum("q,e,qi,eqjc->eijc", wq, det, psi, dphi)


def coupling_edge_blocks(psi_m, psi_n, phi_m, phi_n, normals, wq, lengths, interior):
    """Edge part int_e {psi_i} [phi_j] . n_e; returns 4 blocks (ne, dkp, dk, 2)."""
    w = wq[None, :] * lengths[:, None]
    avg_m = np.where(interior, 0.5, 1.0)[:, None] * w
    avg_n = np.where(interior, 0.5, 0.0)[:, None] * w
    mm = np.einsum("eq,eqi,eqj,ec->eijc", avg_m, psi_m, phi_m, normals)
    mn = -np.einsum("eq,eqi,eqj,ec->eijc", avg_m, psi_m, phi_n, normals)
    nm = np.einsum("eq,eqi,eqj,ec->eijc", avg_n, psi_n, phi_m, normals)
    nn = -np.einsum("eq,eqi,eqj,ec->eijc", avg_n, psi_n, phi_n, normals)
    return mm, mn, nm, nn


def convection_volume_local(phi, dphi, wvals, wdiv, wq, det):
    """int_T (w . grad phi_j) phi_i + (1/2)(div w) phi_j phi_i."""
    wgrad = np.einsum("eqc,eqjc->eqj", wvals, dphi)
    out = np.einsum("q,e,qi,eqj->eij", wq, det, phi, wgrad)
    out += 0.5 * np.einsum("q,e,eq,qi,qj->eij", wq, det, wdiv, phi, phi)
    return out


def convection_edge_blocks(phi_m, phi_n, w_m, w_n, normals, wq, lengths,
                           interior, gvals):
    """Upwind inflow terms plus the -(1/2)[w].n {z theta} edge correction.

    w_m / w_n are advecting-velocity traces (ne, nq, 2); gvals holds the
    exterior boundary trace used on inflow boundary edges; the matching load
    contribution is returned as (ne, dk, 2).
    """
    w = wq[None, :] * lengths[:, None]  # (ne, nq)
    sn_m = np.einsum("eqc,ec->eq", w_m, normals)
    sn_n = np.einsum("eqc,ec->eq", w_n, normals)
    s = np.where(interior[:, None], 0.5 * (sn_m + sn_n), sn_m)
    jwn = np.where(interior[:, None], sn_m - sn_n, 0.0)

    inflow = np.abs(s) * (s < 0.0)
    outflow = np.abs(s) * (s > 0.0)

    a_mm = inflow - np.where(interior[:, None], 0.25 * jwn, 0.5 * s)
    a_mn = np.where(interior[:, None], -inflow, 0.0)
    a_nn = np.where(interior[:, None], outflow - 0.25 * jwn, 0.0)
    a_nm = np.where(interior[:, None], -outflow, 0.0)

    mm = np.einsum("eq,eqi,eqj->eij", w * a_mm, phi_m, phi_m)
    mn = np.einsum("eq,eqi,eqj->eij", w * a_mn, phi_m, phi_n)
    nm = np.einsum("eq,eqi,eqj->eij", w * a_nm, phi_n, phi_m)
    nn = np.einsum("eq,eqi,eqj->eij", w * a_nn, phi_n, phi_n)

    bdry_in = np.where(interior[:, None], 0.0, inflow)
    load = np.einsum("eq,eqc,eqi->eic", w * bdry_in, gvals, phi_m)
    return mm, mn, nm, nn, load
