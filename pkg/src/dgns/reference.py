"""Slow dense reference assembly used to cross-check the fast kernels.

Everything here is written as straightforward per-entity quadrature loops
that evaluate basis functions on the fly from raw vertex coordinates; no
precomputed trace tables or kernel code is reused, so agreement with the
fast path is a genuine two-route check.  Intended for tiny meshes only.
"""

import numpy as np

from .basis import OrthonormalBasis
from .quadrature import edge_rule, triangle_rule


class _ElementGeometry:
    """Affine map of one triangle recomputed from its vertex coordinates."""

    def __init__(self, coords):
        self.v0 = coords[0]
        self.jac = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
        self.det = float(np.linalg.det(self.jac))
        self.inv = np.linalg.inv(self.jac)

    def to_reference(self, pts):
        return (pts - self.v0) @ self.inv.T

    def gradients(self, basis, ref_pts):
        # physical gradient: B^{-T} @ reference gradient
        return basis.grad(ref_pts) @ self.inv


def _geometries(mesh):
    return [_ElementGeometry(mesh.vertices[tri]) for tri in mesh.triangles]


def _edge_setup(mesh, rule):
    """Per-edge quadrature points, outward-from-owner normals and adjacency."""
    edges = []
    for e in range(mesh.num_edges):
        a, b = mesh.edge_vertices[e]
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        pts = pa[None, :] + rule.points[:, None] * (pb - pa)[None, :]
        length = float(np.linalg.norm(pb - pa))
        tang = (pb - pa) / length
        normal = np.array([tang[1], -tang[0]])
        tm, tn = mesh.edge_elements[e]
        owner_centroid = mesh.vertices[mesh.triangles[tm]].mean(axis=0)
        target = (mesh.vertices[mesh.triangles[tn]].mean(axis=0) if tn >= 0
                  else 0.5 * (pa + pb))
        if normal @ (target - owner_centroid) < 0:
            normal = -normal
        edges.append((pts, length, normal, int(tm), int(tn)))
    return edges


def _vel_dof(elem, comp, j, dk):
    return elem * 2 * dk + comp * dk + j


def dense_mass(mesh, k):
    basis = OrthonormalBasis(k)
    dk = basis.dim
    rule = triangle_rule(3 * k + 1)
    n = 2 * dk * mesh.num_triangles
    out = np.zeros((n, n))
    for e, geo in enumerate(_geometries(mesh)):
        phi = basis.eval(rule.points)
        for i in range(dk):
            for j in range(dk):
                val = geo.det * np.sum(rule.weights * phi[:, i] * phi[:, j])
                for c in range(2):
                    out[_vel_dof(e, c, i, dk), _vel_dof(e, c, j, dk)] += val
    return out


def dense_penalty(mesh, k, sigma):
    basis = OrthonormalBasis(k)
    dk = basis.dim
    rule = edge_rule(3 * k + 2)
    n = 2 * dk * mesh.num_triangles
    out = np.zeros((n, n))
    geos = _geometries(mesh)
    for pts, length, normal, tm, tn in _edge_setup(mesh, rule):
        sides = [(tm, 1.0)] + ([(tn, -1.0)] if tn >= 0 else [])
        traces = {t: basis.eval(geos[t].to_reference(pts)) for t, _ in sides}
        for ti, si in sides:
            for tj, sj in sides:
                for i in range(dk):
                    for j in range(dk):
                        val = (sigma / length) * length * np.sum(
                            rule.weights * si * traces[ti][:, i] * sj * traces[tj][:, j])
                        for c in range(2):
                            out[_vel_dof(ti, c, i, dk), _vel_dof(tj, c, j, dk)] += val
    return out


def dense_diffusion(mesh, k, eps):
    basis = OrthonormalBasis(k)
    dk = basis.dim
    vrule = triangle_rule(3 * k + 1)
    erule = edge_rule(3 * k + 2)
    n = 2 * dk * mesh.num_triangles
    out = np.zeros((n, n))
    geos = _geometries(mesh)
    for e, geo in enumerate(geos):
        grads = geo.gradients(basis, vrule.points)
        for i in range(dk):
            for j in range(dk):
                val = geo.det * np.sum(
                    vrule.weights * np.sum(grads[:, i] * grads[:, j], axis=1))
                for c in range(2):
                    out[_vel_dof(e, c, i, dk), _vel_dof(e, c, j, dk)] += val
    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        interior = tn >= 0
        sides = [(tm, 1.0)] + ([(tn, -1.0)] if interior else [])
        avg = 0.5 if interior else 1.0
        trace = {t: basis.eval(geos[t].to_reference(pts)) for t, _ in sides}
        gn = {t: geos[t].gradients(basis, geos[t].to_reference(pts)) @ normal
              for t, _ in sides}
        w = erule.weights * length
        for ti, si in sides:  # test side
            for tj, sj in sides:  # trial side
                for i in range(dk):
                    for j in range(dk):
                        consist = -avg * np.sum(w * gn[tj][:, j] * si * trace[ti][:, i])
                        sym = eps * avg * np.sum(w * gn[ti][:, i] * sj * trace[tj][:, j])
                        for c in range(2):
                            out[_vel_dof(ti, c, i, dk), _vel_dof(tj, c, j, dk)] += consist + sym
    return out


def dense_coupling(mesh, k, kp):
    vb = OrthonormalBasis(k)
    pb = OrthonormalBasis(kp)
    dk, dkp = vb.dim, pb.dim
    vrule = triangle_rule(3 * k + 1)
    erule = edge_rule(3 * k + 2)
    nv = 2 * dk * mesh.num_triangles
    npp = dkp * mesh.num_triangles
    out = np.zeros((npp, nv))
    geos = _geometries(mesh)
    for e, geo in enumerate(geos):
        grads = geo.gradients(vb, vrule.points)
        psi = pb.eval(vrule.points)
        for i in range(dkp):
            for j in range(dk):
                for c in range(2):
                    val = -geo.det * np.sum(vrule.weights * psi[:, i] * grads[:, j, c])
                    out[e * dkp + i, _vel_dof(e, c, j, dk)] += val
    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        interior = tn >= 0
        sides = [(tm, 1.0)] + ([(tn, -1.0)] if interior else [])
        avg = 0.5 if interior else 1.0
        vtrace = {t: vb.eval(geos[t].to_reference(pts)) for t, _ in sides}
        ptrace = {t: pb.eval(geos[t].to_reference(pts)) for t, _ in sides}
        w = erule.weights * length
        for tp, _ in sides:
            for tv, sv in sides:
                for i in range(dkp):
                    for j in range(dk):
                        for c in range(2):
                            val = avg * np.sum(
                                w * ptrace[tp][:, i] * sv * vtrace[tv][:, j]) * normal[c]
                            out[tp * dkp + i, _vel_dof(tv, c, j, dk)] += val
    return out


def _field_on(mesh, k, coeffs):
    basis = OrthonormalBasis(k)
    dk = basis.dim
    local = np.asarray(coeffs).reshape(mesh.num_triangles, 2, dk)
    geos = _geometries(mesh)

    def values(elem, pts):
        ref = geos[elem].to_reference(pts)
        return basis.eval(ref) @ local[elem].T  # (nq, 2)

    def gradients(elem, pts):
        ref = geos[elem].to_reference(pts)
        g = geos[elem].gradients(basis, ref)  # (nq, dk, 2)
        return np.einsum("cj,qjd->qcd", local[elem], g)

    return values, gradients


def dense_convection(mesh, k, w_coeffs, g=None):
    """Dense matrix of z -> c^w(w, z, .) plus the inflow boundary load."""
    basis = OrthonormalBasis(k)
    dk = basis.dim
    vrule = triangle_rule(3 * k + 1)
    erule = edge_rule(3 * k + 2)
    n = 2 * dk * mesh.num_triangles
    out = np.zeros((n, n))
    load = np.zeros(n)
    geos = _geometries(mesh)
    wval, wgrad = _field_on(mesh, k, w_coeffs)

    for e, geo in enumerate(geos):
        pts = geo.v0 + vrule.points @ geo.jac.T
        phi = basis.eval(vrule.points)
        grads = geo.gradients(basis, vrule.points)
        wv = wval(e, pts)
        div = np.einsum("qcc->q", wgrad(e, pts))
        for i in range(dk):
            for j in range(dk):
                adv = np.sum(wv * grads[:, j], axis=1)
                val = geo.det * np.sum(
                    vrule.weights * (adv + 0.5 * div * phi[:, j]) * phi[:, i])
                for c in range(2):
                    out[_vel_dof(e, c, i, dk), _vel_dof(e, c, j, dk)] += val

    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        interior = tn >= 0
        trace_m = basis.eval(geos[tm].to_reference(pts))
        w_m = wval(tm, pts)
        w = erule.weights * length
        if interior:
            trace_n = basis.eval(geos[tn].to_reference(pts))
            w_n = wval(tn, pts)
            s = 0.5 * (w_m + w_n) @ normal
            jwn = (w_m - w_n) @ normal
            for q in range(len(pts)):
                contrib = []
                if s[q] < 0:  # inflow for the owner: n_T = +normal
                    contrib.append((tm, tm, -s[q]))
                    contrib.append((tm, tn, s[q]))
                elif s[q] > 0:  # inflow for the neighbor: n_T = -normal
                    contrib.append((tn, tn, s[q]))
                    contrib.append((tn, tm, -s[q]))
                # -(1/2) [w].n {z th} with {z th} = (z_m th_m + z_n th_n)/2
                contrib.append((tm, tm, -0.25 * jwn[q]))
                contrib.append((tn, tn, -0.25 * jwn[q]))
                tr = {tm: trace_m, tn: trace_n}
                for te, tz, factor in contrib:
                    for i in range(dk):
                        for j in range(dk):
                            val = w[q] * factor * tr[te][q, i] * tr[tz][q, j]
                            for c in range(2):
                                out[_vel_dof(te, c, i, dk), _vel_dof(tz, c, j, dk)] += val
        else:
            s = w_m @ normal
            gv = np.zeros((len(pts), 2)) if g is None else np.asarray(g(pts), dtype=float)
            for q in range(len(pts)):
                factor = -0.5 * s[q]
                if s[q] < 0:
                    factor += -s[q]
                    for i in range(dk):
                        for c in range(2):
                            load[_vel_dof(tm, c, i, dk)] += \
                                w[q] * (-s[q]) * gv[q, c] * trace_m[q, i]
                for i in range(dk):
                    for j in range(dk):
                        val = w[q] * factor * trace_m[q, i] * trace_m[q, j]
                        for c in range(2):
                            out[_vel_dof(tm, c, i, dk), _vel_dof(tm, c, j, dk)] += val
    return out, load


def dense_dirichlet_lift(mesh, k, g, eps, sigma, mu, w_coeffs=None):
    """Dense weak-boundary right-hand side (penalty + consistency + inflow)."""
    basis = OrthonormalBasis(k)
    dk = basis.dim
    erule = edge_rule(3 * k + 2)
    out = np.zeros(2 * dk * mesh.num_triangles)
    geos = _geometries(mesh)
    wval = None
    if w_coeffs is not None:
        wval, _ = _field_on(mesh, k, w_coeffs)
    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        if tn >= 0:
            continue
        trace = basis.eval(geos[tm].to_reference(pts))
        gn = geos[tm].gradients(basis, geos[tm].to_reference(pts)) @ normal
        gv = np.asarray(g(pts), dtype=float)
        w = erule.weights * length
        for i in range(dk):
            for c in range(2):
                val = mu * (sigma / length) * np.sum(w * gv[:, c] * trace[:, i])
                val += mu * eps * np.sum(w * gn[:, i] * gv[:, c])
                if wval is not None:
                    s = wval(tm, pts) @ normal
                    inflow = np.where(s < 0, -s, 0.0)
                    val += np.sum(w * inflow * gv[:, c] * trace[:, i])
                out[_vel_dof(tm, c, i, dk)] += val
    return out


def convection_value(mesh, k, w_coeffs, z_coeffs, th_coeffs):
    """Direct evaluation of the upwind form c^w(w, z, th), zero exterior data."""
    vrule = triangle_rule(3 * k + 1)
    erule = edge_rule(3 * k + 2)
    geos = _geometries(mesh)
    wval, wgrad = _field_on(mesh, k, w_coeffs)
    zval, zgrad = _field_on(mesh, k, z_coeffs)
    tval, _ = _field_on(mesh, k, th_coeffs)

    total = 0.0
    for e, geo in enumerate(geos):
        pts = geo.v0 + vrule.points @ geo.jac.T
        wv = wval(e, pts)
        gz = zgrad(e, pts)
        tv = tval(e, pts)
        div = np.einsum("qcc->q", wgrad(e, pts))
        adv = np.einsum("qd,qcd,qc->q", wv, gz, tv)
        zt = np.sum(zval(e, pts) * tv, axis=1)
        total += geo.det * np.sum(vrule.weights * (adv + 0.5 * div * zt))

    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        w = erule.weights * length
        z_m, t_m = zval(tm, pts), tval(tm, pts)
        w_m = wval(tm, pts)
        if tn >= 0:
            z_n, t_n = zval(tn, pts), tval(tn, pts)
            s = 0.5 * (w_m + wval(tn, pts)) @ normal
            jwn = (w_m - wval(tn, pts)) @ normal
            inflow_m = np.where(s < 0, -s, 0.0)
            inflow_n = np.where(s > 0, s, 0.0)
            total += np.sum(w * inflow_m * np.sum((z_m - z_n) * t_m, axis=1))
            total += np.sum(w * inflow_n * np.sum((z_n - z_m) * t_n, axis=1))
            avg_zt = 0.5 * (np.sum(z_m * t_m, axis=1) + np.sum(z_n * t_n, axis=1))
            total += -0.5 * np.sum(w * jwn * avg_zt)
        else:
            s = w_m @ normal
            inflow = np.where(s < 0, -s, 0.0)
            total += np.sum(w * inflow * np.sum(z_m * t_m, axis=1))
            total += -0.5 * np.sum(w * s * np.sum(z_m * t_m, axis=1))
    return total


def convection_ibp_value(mesh, k, w_coeffs, z_coeffs, th_coeffs):
    """Integration-by-parts companion of convection_value (zero exterior data).

    Evaluates - sum_T [ int (w.grad th).z + (1/2) int (div w) z.th ]
    + (1/2) sum_interior int [w].n {z.th}
    - sum_T int_{dT-} |{w}.n| z_ext.(th_int - th_ext)
    - (1/2) int_{boundary} (w.n) z.th + int_{outflow boundary} |w.n| z.th.

    The two boundary terms combine to (1/2) int |w.n| z.th; elementwise
    divergence-theorem bookkeeping shows this is the sign combination that
    closes the identity.
    """
    vrule = triangle_rule(3 * k + 1)
    erule = edge_rule(3 * k + 2)
    geos = _geometries(mesh)
    wval, wgrad = _field_on(mesh, k, w_coeffs)
    zval, _ = _field_on(mesh, k, z_coeffs)
    tval, tgrad = _field_on(mesh, k, th_coeffs)

    total = 0.0
    for e, geo in enumerate(geos):
        pts = geo.v0 + vrule.points @ geo.jac.T
        wv = wval(e, pts)
        gt = tgrad(e, pts)
        zv = zval(e, pts)
        div = np.einsum("qcc->q", wgrad(e, pts))
        adv = np.einsum("qd,qcd,qc->q", wv, gt, zv)
        zt = np.sum(zv * tval(e, pts), axis=1)
        total -= geo.det * np.sum(vrule.weights * (adv + 0.5 * div * zt))

    for pts, length, normal, tm, tn in _edge_setup(mesh, erule):
        w = erule.weights * length
        z_m, t_m = zval(tm, pts), tval(tm, pts)
        w_m = wval(tm, pts)
        if tn >= 0:
            z_n, t_n = zval(tn, pts), tval(tn, pts)
            s = 0.5 * (w_m + wval(tn, pts)) @ normal
            jwn = (w_m - wval(tn, pts)) @ normal
            avg_zt = 0.5 * (np.sum(z_m * t_m, axis=1) + np.sum(z_n * t_n, axis=1))
            total += 0.5 * np.sum(w * jwn * avg_zt)
            # inflow for owner (z_ext = z_n), inflow for neighbor (z_ext = z_m)
            inflow_m = np.where(s < 0, -s, 0.0)
            inflow_n = np.where(s > 0, s, 0.0)
            total -= np.sum(w * inflow_m * np.sum(z_n * (t_m - t_n), axis=1))
            total -= np.sum(w * inflow_n * np.sum(z_m * (t_n - t_m), axis=1))
        else:
            s = w_m @ normal
            zt = np.sum(z_m * t_m, axis=1)
            total += -0.5 * np.sum(w * s * zt)
            total += np.sum(w * np.where(s > 0, s, 0.0) * zt)
    return total
