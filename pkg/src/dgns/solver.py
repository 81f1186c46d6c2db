"""Saddle-point solves, the semi-implicit backward Euler loop, Picard iteration.

One time step solves the linearized system

    (U^n - U^{n-1})/dt tested with v  +  mu (a + J0)(U^n, v)
        + c^{U^{n-1}}(U^{n-1}, U^n, v) + b(v, P^n) = (f^n, v) + boundary lifts
    b(U^n, q) = boundary divergence data

with the convection frozen at the previous iterate, plus a scalar Lagrange
multiplier enforcing the zero-mean pressure normalization.  The steady Picard
iteration uses the same linearization with the time-derivative block removed.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergenceError, NonFiniteStateError, SingularSystemError
from .forms import (AssemblyContext, FormConfig, assemble_convection,
                    assemble_diffusion, assemble_dirichlet_divergence_rhs,
                    assemble_dirichlet_lift, assemble_load, assemble_mass,
                    assemble_penalty, assemble_pressure_coupling,
                    pressure_mean_vector)
from .space import constant_field


@dataclass
class SolverReport:
    """Post-hoc diagnostics of one saddle solve; residual is recomputed from
    the original blocks, never trusted from the inner solver."""

    residual: float
    iterations: int = 0  # 0 for the direct factorization
    wall_time: float = 0.0
    singular: bool = False


@dataclass
class SaddleSystem:
    """Blocks of one constrained velocity/pressure solve.

    K is the velocity block, B the coupling, mean the vector of pressure
    basis integrals, ones_p the coefficients of the constant-one pressure
    used for the zero-mean shift.
    """

    K: sp.spmatrix
    B: sp.spmatrix
    mean: np.ndarray
    rhs_u: np.ndarray
    rhs_p: np.ndarray
    ones_p: np.ndarray

    def matrix(self):
        m_col = sp.csc_matrix(self.mean.reshape(-1, 1))
        return sp.bmat([[self.K, self.B.T, None],
                        [self.B, None, m_col],
                        [None, m_col.T, None]], format="csc")

    def rhs(self):
        return np.concatenate([self.rhs_u, self.rhs_p, [0.0]])


class FactorCache:
    """Reusable LU factorization for sequences of slowly drifting systems.

    The time loop and the Picard iteration change only the convection block
    between consecutive solves, so one factorization preconditions many steps
    through iterative refinement; a fresh factorization is taken whenever
    refinement stalls.
    """

    def __init__(self, max_refine: int = 8):
        self.lu = None
        self.max_refine = max_refine
        self.factorizations = 0

    def _factor(self, matrix):
        try:
            self.lu = spla.splu(matrix)
        except (RuntimeError, ValueError) as exc:
            self.lu = None
            raise SingularSystemError(f"saddle factorization failed: {exc}") from exc
        self.factorizations += 1

    def solve(self, matrix, rhs, rtol):
        """Solve to |r| <= rtol |rhs|; returns (x, refinement_iterations)."""
        scale = max(np.linalg.norm(rhs), 1e-300)
        if self.lu is not None:
            x = self.lu.solve(rhs)
            for it in range(self.max_refine + 1):
                r = rhs - matrix @ x
                if np.linalg.norm(r) <= rtol * scale:
                    return x, it
                x = x + self.lu.solve(r)
        self._factor(matrix)
        x = self.lu.solve(rhs)
        for it in range(self.max_refine + 1):
            r = rhs - matrix @ x
            if np.linalg.norm(r) <= rtol * scale:
                return x, it
            x = x + self.lu.solve(r)
        raise SingularSystemError(
            f"iterative refinement stalled at residual {np.linalg.norm(r) / scale:.3e}")


def solve_saddle(system: SaddleSystem, rtol: float = 1e-10, cache: FactorCache = None):
    """Factorization-based solve of the bordered saddle system.

    Returns (velocity, pressure, report); the pressure is shifted to exact
    zero mean.  Raises SingularSystemError on factorization breakdown or
    when the recomputed block residuals exceed rtol * |rhs| (which typically
    signals an inf-sup deficient pairing or an insufficient penalty).  An
    optional FactorCache reuses a previous factorization via iterative
    refinement.
    """
    start = time.perf_counter()
    matrix = system.matrix()
    rhs = system.rhs()
    own_cache = cache if cache is not None else FactorCache()
    x, refine_iters = own_cache.solve(matrix, rhs, rtol)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("saddle solve produced non-finite entries")

    nu = system.K.shape[0]
    npp = system.B.shape[0]
    u = x[:nu]
    p = x[nu:nu + npp]
    lam = x[-1]

    r_mom = system.K @ u + system.B.T @ p - system.rhs_u
    r_div = system.B @ u + system.mean * lam - system.rhs_p
    scale = max(np.linalg.norm(rhs), 1e-300)
    residual = max(np.linalg.norm(r_mom), np.linalg.norm(r_div)) / scale
    report = SolverReport(residual=residual, iterations=refine_iters,
                          wall_time=time.perf_counter() - start)
    if residual > rtol:
        report.singular = True
        raise SingularSystemError(
            f"saddle solve residual {residual:.3e} exceeds rtol={rtol:.1e}")

    # exact zero-mean normalization (b(., 1) vanishes, so the momentum
    # residual is untouched by the shift)
    omega = float(system.mean @ system.ones_p)
    p = p - (system.mean @ p) / omega * system.ones_p
    return u, p, report


@dataclass
class TimeLoopConfig:
    """Backward Euler settings; dt must divide the final time exactly."""

    dt: float
    t_final: float
    form: FormConfig
    forcing: object = None         # f(points, t, mu) -> (n, 2), or None
    boundary: object = None        # g(points) -> (n, 2), or None for no-slip
    initial: object = None         # pointwise u0(points), BrokenField/array, or None
    ic_policy: str = "ph"          # "ph" (projection onto V_h) or "local_l2"
    rtol: float = 1e-10
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.dt < 1.0:
            raise ValueError("time step must satisfy 0 < dt < 1")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 4.0 * np.spacing(max(steps, 1.0)):
            raise ValueError("t_final must be an integer multiple of dt")
        if self.ic_policy not in ("ph", "local_l2"):
            raise ValueError("ic_policy must be 'ph' or 'local_l2'")

    @property
    def num_steps(self):
        return int(round(self.t_final / self.dt))


@dataclass
class TimeLoopResult:
    velocity: np.ndarray
    pressure: np.ndarray
    reports: list
    snapshots: list = field(default_factory=list)
    constraint_residual: float = 0.0


def _initial_field(ctx, loop):
    from .projections import project_ph  # deferred: projections builds on this module
    from .space import BrokenField, project_l2

    if loop.initial is None:
        return np.zeros(ctx.vel_space.num_dofs)
    if isinstance(loop.initial, BrokenField):
        return loop.initial.coeffs.copy()
    if isinstance(loop.initial, np.ndarray):
        return loop.initial.copy()
    if loop.ic_policy == "local_l2":
        local = project_l2(ctx.vel_space, loop.initial)
        constrained = project_ph(ctx, loop.initial, rtol=loop.rtol)
        gap = np.linalg.norm(local.coeffs - constrained.coeffs)
        logging.getLogger(__name__).info(
            "local_l2 initial condition differs from constrained projection by %.3e", gap)
        return local.coeffs
    return project_ph(ctx, loop.initial, rtol=loop.rtol).coeffs


class _SteadyBlocks:
    """Operators shared by every linearized solve on one context."""

    def __init__(self, ctx: AssemblyContext, form: FormConfig, boundary=None):
        self.ctx = ctx
        self.form = form
        self.boundary = boundary
        self.A = assemble_diffusion(ctx, form)
        self.J = assemble_penalty(ctx, form.sigma)
        self.B = assemble_pressure_coupling(ctx)
        self.mass = assemble_mass(ctx)
        self.mean = pressure_mean_vector(ctx)
        self.ones_p = constant_field(ctx.pres_space, [1.0]).coeffs
        self.viscous = (form.mu * (self.A + self.J)).tocsr()
        self.lift = assemble_dirichlet_lift(ctx, boundary, form)
        self.rhs_p = assemble_dirichlet_divergence_rhs(ctx, boundary)


def backward_euler_run(ctx: AssemblyContext, loop: TimeLoopConfig) -> TimeLoopResult:
    """March the linearized system to t_final; convection is frozen one step back."""
    blocks = _SteadyBlocks(ctx, loop.form, loop.boundary)
    mu = loop.form.mu
    dt = loop.dt
    base = (blocks.mass / dt + blocks.viscous).tocsr()

    u = _initial_field(ctx, loop)
    p = np.zeros(ctx.pres_space.num_dofs)
    reports = []
    snapshots = []
    constraint = 0.0
    snap_left = sorted(loop.snapshot_times)
    cache = FactorCache()

    for step in range(1, loop.num_steps + 1):
        t = step * dt
        conv, conv_load = assemble_convection(ctx, u, loop.boundary)
        rhs_u = blocks.mass @ u / dt + blocks.lift + conv_load
        if loop.forcing is not None:
            rhs_u += assemble_load(ctx, lambda pts, tt: loop.forcing(pts, tt, mu), t)
        system = SaddleSystem(base + conv, blocks.B, blocks.mean,
                              rhs_u, blocks.rhs_p, blocks.ones_p)
        u, p, report = solve_saddle(system, loop.rtol, cache)
        if not np.all(np.isfinite(u)):
            raise NonFiniteStateError(f"non-finite state at step {step} (t={t:g})")
        reports.append(report)
        constraint = max(constraint,
                         float(np.abs(blocks.B @ u - blocks.rhs_p).max()))
        while snap_left and snap_left[0] <= t + 0.5 * dt:
            snapshots.append((t, u.copy(), p.copy()))
            snap_left.pop(0)

    return TimeLoopResult(u, p, reports, snapshots, constraint)


@dataclass
class SteadyResult:
    velocity: np.ndarray
    pressure: np.ndarray
    iterations: int
    reports: list


def steady_picard(ctx: AssemblyContext, form: FormConfig, boundary=None,
                  forcing=None, tol: float = 1e-8, max_iters: int = 100,
                  convection: bool = True, rtol: float = 1e-10) -> SteadyResult:
    """Fixed-point iteration for the steady problem, linearized like the time loop.

    Convergence is declared when the L2 norm of the velocity update drops
    below tol.  Expect convergence only in diffusion-dominated regimes; on
    failure a NoConvergenceError is raised and the caller may fall back to
    time marching.
    """
    blocks = _SteadyBlocks(ctx, form, boundary)
    cache = FactorCache()
    rhs_static = blocks.lift.copy()
    if forcing is not None:
        rhs_static = rhs_static + assemble_load(
            ctx, lambda pts, tt: forcing(pts, tt, form.mu), 0.0)

    def linear_solve(w):
        rhs_u = rhs_static
        K = blocks.viscous
        if convection and w is not None:
            conv, conv_load = assemble_convection(ctx, w, boundary)
            K = K + conv
            rhs_u = rhs_static + conv_load
        system = SaddleSystem(K, blocks.B, blocks.mean, rhs_u,
                              blocks.rhs_p, blocks.ones_p)
        return solve_saddle(system, rtol, cache)

    u, p, report = linear_solve(None)  # Stokes start
    reports = [report]
    for m in range(1, max_iters + 1):
        u_new, p, report = linear_solve(u if convection else None)
        reports.append(report)
        diff = u_new - u
        update = float(np.sqrt(diff @ (blocks.mass @ diff)))
        u = u_new
        if update <= tol:
            return SteadyResult(u, p, m, reports)
    raise NoConvergenceError(
        f"Picard iteration did not reach {tol:g} in {max_iters} iterations")
