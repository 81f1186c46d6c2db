"""Broken-norm errors against exact solutions and convergence-rate extraction.

The energy norm is ||v||_eps = ( |||grad v|||^2 + J0(v, v) )^{1/2} with the
same penalty weighting sigma_e/|e| as the discrete scheme, summed over all
edges; on boundary edges the jump of an error u - U is the trace itself.
Error integration uses high-order rules (degree 10 by default) since the
exact solutions are not polynomial.
"""

from dataclasses import dataclass

import numpy as np

from .forms import AssemblyContext


def error_context(ctx: AssemblyContext, degree: int = 10) -> AssemblyContext:
    """High-order quadrature twin of an assembly context for error norms."""
    return AssemblyContext(ctx.mesh, ctx.vel_space, ctx.pres_space,
                           vol_degree=degree, edge_degree=degree)


def _field_values_volume(err_ctx, coeffs, components):
    local = np.asarray(coeffs).reshape(err_ctx.mesh.num_triangles, components, -1)
    table = err_ctx.phi if components == 2 else err_ctx.psi
    return np.einsum("ecj,qj->eqc", local, table)


def broken_energy_error(err_ctx: AssemblyContext, coeffs, exact, t,
                        sigma: float) -> float:
    """|| u(t) - U ||_eps for a discrete velocity U against a continuous u.

    Interior-edge jumps of the error reduce to the (negated) jumps of U;
    boundary edges contribute the trace mismatch u - U.
    """
    mesh = err_ctx.mesh
    local = np.asarray(coeffs).reshape(mesh.num_triangles, 2, -1)

    grad_num = np.einsum("ecj,eqjd->eqcd", local, err_ctx.dphi)
    vol_pts = err_ctx.vol_points.reshape(-1, 2)
    nt, nqv = err_ctx.vol_points.shape[:2]
    grad_diff = grad_num - (0.0 if exact is None else
                            exact.velocity_gradient(vol_pts, t).reshape(nt, nqv, 2, 2))
    vol = np.einsum("q,e,eqcd,eqcd->", err_ctx.vol_rule.weights,
                    mesh.elem_det, grad_diff, grad_diff)

    owner = mesh.edge_elements[:, 0]
    neighbor = mesh.edge_elements[:, 1]
    u_m = np.einsum("ecj,eqj->eqc", local[owner], err_ctx.phi_m)
    jump = u_m.copy()
    ii = err_ctx.interior
    if ii.any():
        jump[ii] -= np.einsum("ecj,eqj->eqc", local[neighbor[ii]], err_ctx.phi_n[ii])
    if exact is not None:
        bdry = ~ii
        edge_pts = err_ctx.edge_points[bdry].reshape(-1, 2)
        u_exact = exact.velocity(edge_pts, t).reshape(jump[bdry].shape)
        jump[bdry] -= u_exact
    # (sigma/|e|) * |e| dt cancels the length
    jumps = sigma * np.einsum("q,eqc,eqc->", err_ctx.edge_rule.weights, jump, jump)
    return float(np.sqrt(vol + jumps))


def energy_norm(err_ctx: AssemblyContext, coeffs, sigma: float) -> float:
    """Energy norm of a discrete field itself."""
    return broken_energy_error(err_ctx, coeffs, None, 0.0, sigma)


def l2_error(err_ctx: AssemblyContext, coeffs, exact_fn, t, components: int = 2) -> float:
    """L2 distance between a broken field and a pointwise function."""
    mesh = err_ctx.mesh
    vals = _field_values_volume(err_ctx, coeffs, components)
    pts = err_ctx.vol_points.reshape(-1, 2)
    ex = np.asarray(exact_fn(pts, t), dtype=float).reshape(vals.shape[0], vals.shape[1], -1)
    diff = vals - ex
    return float(np.sqrt(np.einsum("q,e,eqc,eqc->", err_ctx.vol_rule.weights,
                                   mesh.elem_det, diff, diff)))


def pressure_l2_error(err_ctx: AssemblyContext, coeffs, exact_p, t) -> float:
    """Pressure L2 error after aligning both means to zero.

    Both the discrete and the exact pressure are nominally mean free, but
    the alignment removes quadrature-level drift before differencing.
    """
    mesh = err_ctx.mesh
    area = float(mesh.areas.sum())
    wq = err_ctx.vol_rule.weights

    vals = _field_values_volume(err_ctx, coeffs, 1)[:, :, 0]
    pts = err_ctx.vol_points.reshape(-1, 2)
    ex = np.asarray(exact_p(pts, t), dtype=float).reshape(vals.shape)

    mean_num = np.einsum("q,e,eq->", wq, mesh.elem_det, vals) / area
    mean_ex = np.einsum("q,e,eq->", wq, mesh.elem_det, ex) / area
    diff = (vals - mean_num) - (ex - mean_ex)
    return float(np.sqrt(np.einsum("q,e,eq,eq->", wq, mesh.elem_det, diff, diff)))


def discrete_l2_norm(mesh, coeffs) -> float:
    """L2 norm of a broken field from its coefficients.

    Exact because the reference basis is orthonormal: the squared norm on an
    element is detJ times the squared coefficient norm.
    """
    local = np.asarray(coeffs).reshape(mesh.num_triangles, -1)
    return float(np.sqrt((mesh.elem_det[:, None] * local**2).sum()))


def interpolant_comparison_errors(err_ctx: AssemblyContext, vel_coeffs,
                                  pres_coeffs, exact, t):
    """Errors measured against elementwise interpolation of the exact pair.

    Returns (grad_err, l2_err, p_err) where the velocity is compared with its
    Lagrange interpolant (gradient seminorm and L2) and the pressure with its
    elementwise L2 projection.  This is the discretization-error split that
    published convergence tables for this scheme report; it converges at the
    same rates as the plain norms but without the interpolation-error offset.
    """
    from .space import interpolate_lagrange, project_l2

    mesh = err_ctx.mesh
    interp = interpolate_lagrange(err_ctx.vel_space, exact.velocity, t)
    diff = np.asarray(vel_coeffs) - interp.coeffs
    grad = np.einsum("ecj,eqjd->eqcd", err_ctx.vel_space.coeff_view(diff),
                     err_ctx.dphi)
    grad_err = float(np.sqrt(np.einsum("q,e,eqcd,eqcd->", err_ctx.vol_rule.weights,
                                       mesh.elem_det, grad, grad)))
    l2 = discrete_l2_norm(mesh, diff)
    p_proj = project_l2(err_ctx.pres_space, exact.pressure, t)
    p_err = discrete_l2_norm(mesh, np.asarray(pres_coeffs) - p_proj.coeffs)
    return grad_err, l2, p_err


def eoc(errors) -> np.ndarray:
    """Observed orders log2(e_{i-1}/e_i) for errors on meshes halving in h."""
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or len(errors) < 2:
        raise ValueError("need at least two error values")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be positive and finite")
    return np.log2(errors[:-1] / errors[1:])


@dataclass(frozen=True)
class ErrorTriple:
    """Errors of one run: energy and L2 for velocity, L2 for pressure."""

    h: float
    dt: float
    energy: float
    l2: float
    pressure: float

    def __post_init__(self):
        vals = (self.h, self.dt, self.energy, self.l2, self.pressure)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"error record must be finite and nonnegative: {vals}")


class ConvergenceTable:
    """Errors over a refining mesh sequence with observed orders."""

    COLUMNS = ("h", "energy_err", "energy_rate", "l2_err", "l2_rate",
               "p_err", "p_rate")

    def __init__(self, rows):
        self.rows = list(rows)
        hs = [r.h for r in self.rows]
        if any(not h2 < h1 for h1, h2 in zip(hs, hs[1:])):
            raise ValueError("mesh sequence must be strictly refining")
        self.energy_rates = self._rates([r.energy for r in self.rows])
        self.l2_rates = self._rates([r.l2 for r in self.rows])
        self.pressure_rates = self._rates([r.pressure for r in self.rows])

    @staticmethod
    def _rates(errs):
        if len(errs) < 2 or any(e <= 0 for e in errs):
            return [None] * max(len(errs) - 1, 0)
        return list(eoc(errs))

    def csv_lines(self):
        lines = [",".join(self.COLUMNS)]
        for i, row in enumerate(self.rows):
            def fmt_rate(rates):
                if i == 0 or rates[i - 1] is None:
                    return ""
                return f"{rates[i - 1]:.4f}"
            lines.append(",".join([
                f"{row.h:.12g}",
                f"{row.energy:.12e}", fmt_rate(self.energy_rates),
                f"{row.l2:.12e}", fmt_rate(self.l2_rates),
                f"{row.pressure:.12e}", fmt_rate(self.pressure_rates),
            ]))
        return lines

    def __str__(self):
        header = (f"{'h':>10} {'energy':>13} {'rate':>7} {'L2':>13} "
                  f"{'rate':>7} {'pressure':>13} {'rate':>7}")
        out = [header]
        for i, row in enumerate(self.rows):
            def fmt(rates):
                if i == 0 or rates[i - 1] is None:
                    return "      -"
                return f"{rates[i - 1]:7.4f}"
            out.append(f"{row.h:10.6f} {row.energy:13.6e} {fmt(self.energy_rates)} "
                       f"{row.l2:13.6e} {fmt(self.l2_rates)} "
                       f"{row.pressure:13.6e} {fmt(self.pressure_rates)}")
        return "\n".join(out)
