"""Numba-jitted assembly kernels; mirrors numpy_backend exactly.

Loop bodies are written per element / per edge so the JIT can keep the small
local blocks in registers.  All kernels are cached to disk to amortize
compilation across runs.
"""

import numpy as np
from numba import njit

NAME = "numba"

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def mass_local(phi, wq, det):
    nq, dk = phi.shape
    nt = det.shape[0]
    ref = np.zeros((dk, dk))
    for q in range(nq):
        for i in range(dk):
            for j in range(dk):
                ref[i, j] += wq[q] * phi[q, i] * phi[q, j]
    out = np.empty((nt, dk, dk))
    for e in range(nt):
        for i in range(dk):
            for j in range(dk):
                out[e, i, j] = det[e] * ref[i, j]
    return out


@njit(**_JIT)
def stiffness_local(dphi, wq, det):
    nt, nq, dk, _ = dphi.shape
    out = np.zeros((nt, dk, dk))
    for e in range(nt):
        for q in range(nq):
            w = wq[q] * det[e]
            for i in range(dk):
                for j in range(dk):
                    out[e, i, j] += w * (dphi[e, q, i, 0] * dphi[e, q, j, 0]
                                         + dphi[e, q, i, 1] * dphi[e, q, j, 1])
    return out


@njit(**_JIT)
def load_local(phi, fvals, wq, det):
    nt, nq, nc = fvals.shape
    dk = phi.shape[1]
    out = np.zeros((nt, dk, nc))
    for e in range(nt):
        for q in range(nq):
            w = wq[q] * det[e]
            for i in range(dk):
                for c in range(nc):
                    out[e, i, c] += w * fvals[e, q, c] * phi[q, i]
    return out


@njit(**_JIT)
def diffusion_edge_blocks(phi_m, phi_n, gn_m, gn_n, wq, lengths, interior, eps):
    ne, nq, dk = phi_m.shape
    mm = np.zeros((ne, dk, dk))
    mn = np.zeros((ne, dk, dk))
    nm = np.zeros((ne, dk, dk))
    nn = np.zeros((ne, dk, dk))
    for e in range(ne):
        am = 0.5 if interior[e] else 1.0
        an = 0.5 if interior[e] else 0.0
        for q in range(nq):
            w = wq[q] * lengths[e]
            for i in range(dk):
                for j in range(dk):
                    mm[e, i, j] += w * (-am * gn_m[e, q, j] * phi_m[e, q, i]
                                        + eps * am * gn_m[e, q, i] * phi_m[e, q, j])
                    mn[e, i, j] += w * (-an * gn_n[e, q, j] * phi_m[e, q, i]
                                        - eps * am * gn_m[e, q, i] * phi_n[e, q, j])
                    nm[e, i, j] += w * (am * gn_m[e, q, j] * phi_n[e, q, i]
                                        + eps * an * gn_n[e, q, i] * phi_m[e, q, j])
                    nn[e, i, j] += w * (an * gn_n[e, q, j] * phi_n[e, q, i]
                                        - eps * an * gn_n[e, q, i] * phi_n[e, q, j])
    return mm, mn, nm, nn


@njit(**_JIT)
def penalty_edge_blocks(phi_m, phi_n, wq, interior, sigma):
    ne, nq, dk = phi_m.shape
    mm = np.zeros((ne, dk, dk))
    mn = np.zeros((ne, dk, dk))
    nm = np.zeros((ne, dk, dk))
    nn = np.zeros((ne, dk, dk))
    for e in range(ne):
        for q in range(nq):
            w = sigma * wq[q]
            for i in range(dk):
                for j in range(dk):
                    mm[e, i, j] += w * phi_m[e, q, i] * phi_m[e, q, j]
                    mn[e, i, j] -= w * phi_m[e, q, i] * phi_n[e, q, j]
                    nm[e, i, j] -= w * phi_n[e, q, i] * phi_m[e, q, j]
                    nn[e, i, j] += w * phi_n[e, q, i] * phi_n[e, q, j]
    return mm, mn, nm, nn


@njit(**_JIT)
def coupling_volume_local(psi, dphi, wq, det):
    nt, nq, dk, _ = dphi.shape
    dkp = psi.shape[1]
    out = np.zeros((nt, dkp, dk, 2))
    for e in range(nt):
        for q in range(nq):
            w = wq[q] * det[e]
            for i in range(dkp):
                for j in range(dk):
                    out[e, i, j, 0] -= w * psi[q, i] * dphi[e, q, j, 0]
                    out[e, i, j, 1] -= w * psi[q, i] * dphi[e, q, j, 1]
    return out


@njit(**_JIT)
def coupling_edge_blocks(psi_m, psi_n, phi_m, phi_n, normals, wq, lengths, interior):
    ne, nq, dkp = psi_m.shape
    dk = phi_m.shape[2]
    mm = np.zeros((ne, dkp, dk, 2))
    mn = np.zeros((ne, dkp, dk, 2))
    nm = np.zeros((ne, dkp, dk, 2))
    nn = np.zeros((ne, dkp, dk, 2))
    for e in range(ne):
        am = 0.5 if interior[e] else 1.0
        an = 0.5 if interior[e] else 0.0
        for q in range(nq):
            w = wq[q] * lengths[e]
            for i in range(dkp):
                for j in range(dk):
                    for c in range(2):
                        nc = normals[e, c]
                        mm[e, i, j, c] += w * am * psi_m[e, q, i] * phi_m[e, q, j] * nc
                        mn[e, i, j, c] -= w * am * psi_m[e, q, i] * phi_n[e, q, j] * nc
                        nm[e, i, j, c] += w * an * psi_n[e, q, i] * phi_m[e, q, j] * nc
                        nn[e, i, j, c] -= w * an * psi_n[e, q, i] * phi_n[e, q, j] * nc
    return mm, mn, nm, nn


@njit(**_JIT)
def convection_volume_local(phi, dphi, wvals, wdiv, wq, det):
    nt, nq, dk, _ = dphi.shape
    out = np.zeros((nt, dk, dk))
    for e in range(nt):
        for q in range(nq):
            w = wq[q] * det[e]
            for j in range(dk):
                adv = (wvals[e, q, 0] * dphi[e, q, j, 0]
                       + wvals[e, q, 1] * dphi[e, q, j, 1]
                       + 0.5 * wdiv[e, q] * phi[q, j])
                for i in range(dk):
                    out[e, i, j] += w * phi[q, i] * adv
    return out


@njit(**_JIT)
def convection_edge_blocks(phi_m, phi_n, w_m, w_n, normals, wq, lengths,
                           interior, gvals):
    ne, nq, dk = phi_m.shape
    mm = np.zeros((ne, dk, dk))
    mn = np.zeros((ne, dk, dk))
    nm = np.zeros((ne, dk, dk))
    nn = np.zeros((ne, dk, dk))
    load = np.zeros((ne, dk, 2))
    for e in range(ne):
        nx = normals[e, 0]
        ny = normals[e, 1]
        for q in range(nq):
            w = wq[q] * lengths[e]
            sm = w_m[e, q, 0] * nx + w_m[e, q, 1] * ny
            if interior[e]:
                sn = w_n[e, q, 0] * nx + w_n[e, q, 1] * ny
                s = 0.5 * (sm + sn)
                jwn = sm - sn
                a_mm = -0.25 * jwn
                a_nn = -0.25 * jwn
                a_mn = 0.0
                a_nm = 0.0
                if s < 0.0:
                    a_mm += -s
                    a_mn = s
                elif s > 0.0:
                    a_nn += s
                    a_nm = -s
                for i in range(dk):
                    for j in range(dk):
                        mm[e, i, j] += w * a_mm * phi_m[e, q, i] * phi_m[e, q, j]
                        mn[e, i, j] += w * a_mn * phi_m[e, q, i] * phi_n[e, q, j]
                        nm[e, i, j] += w * a_nm * phi_n[e, q, i] * phi_m[e, q, j]
                        nn[e, i, j] += w * a_nn * phi_n[e, q, i] * phi_n[e, q, j]
            else:
                a_mm = -0.5 * sm
                gload = 0.0
                if sm < 0.0:
                    a_mm += -sm
                    gload = -sm
                for i in range(dk):
                    for j in range(dk):
                        mm[e, i, j] += w * a_mm * phi_m[e, q, i] * phi_m[e, q, j]
                    load[e, i, 0] += w * gload * gvals[e, q, 0] * phi_m[e, q, i]
                    load[e, i, 1] += w * gload * gvals[e, q, 1] * phi_m[e, q, i]
    return mm, mn, nm, nn, load
