import numpy as np
import pytest
import scipy.sparse as sp

from dgns.errors import (NoConvergenceError, SingularSystemError)
from dgns.forms import (AssemblyContext, FormConfig, assemble_diffusion,
                        assemble_dirichlet_divergence_rhs, assemble_dirichlet_lift,
                        assemble_mass, assemble_penalty, assemble_pressure_coupling,
                        pressure_mean_vector)
from dgns.mesh import build_uniform_mesh
from dgns.projections import project_ph
from dgns.solutions import get_example
from dgns.solver import (FactorCache, SaddleSystem, TimeLoopConfig,
                         backward_euler_run, solve_saddle, steady_picard)
from dgns.space import BrokenSpace, constant_field, project_l2


def stokes_system(ctx, form, g=None, rhs_u=None):
    A = assemble_diffusion(ctx, form)
    J = assemble_penalty(ctx, form.sigma)
    lift = assemble_dirichlet_lift(ctx, g, form) if g is not None else \
        np.zeros(ctx.vel_space.num_dofs)
    if rhs_u is not None:
        lift = lift + rhs_u
    return SaddleSystem(
        (form.mu * (A + J)).tocsr(),
        assemble_pressure_coupling(ctx),
        pressure_mean_vector(ctx),
        lift,
        assemble_dirichlet_divergence_rhs(ctx, g),
        constant_field(ctx.pres_space, [1.0]).coeffs)


@pytest.fixture(scope="module")
def disc4():
    mesh = build_uniform_mesh(4)
    vel = BrokenSpace(mesh, 1, 2)
    pres = BrokenSpace(mesh, 0, 1)
    return mesh, vel, pres, AssemblyContext(mesh, vel, pres)


def test_zero_data_zero_solution(disc4):
    _, vel, pres, ctx = disc4
    u, p, report = solve_saddle(stokes_system(ctx, FormConfig()))
    assert abs(u).max() == 0.0 and abs(p).max() == 0.0
    assert report.residual == 0.0
    assert report.iterations == 0


def test_stokes_patch_test(disc4):
    _, vel, pres, ctx = disc4

    def g(p):
        return np.stack([p[:, 1], -p[:, 0]], axis=1)

    u, p, _ = solve_saddle(stokes_system(ctx, FormConfig(), g=g))
    interp = project_l2(vel, g)
    assert abs(u - interp.coeffs).max() < 1e-9
    assert abs(p).max() < 1e-9


def test_pressure_mean_zero_post_shift(disc4, rng):
    _, vel, pres, ctx = disc4
    system = stokes_system(ctx, FormConfig(),
                           rhs_u=rng.standard_normal(vel.num_dofs))
    _, p, _ = solve_saddle(system)
    assert abs(system.mean @ p) <= 1e-12 * max(1.0, abs(p).max())


def test_dense_lu_oracle_on_small_mesh(rng):
    mesh = build_uniform_mesh(2)
    vel = BrokenSpace(mesh, 1, 2)
    pres = BrokenSpace(mesh, 0, 1)
    ctx = AssemblyContext(mesh, vel, pres)
    system = stokes_system(ctx, FormConfig(),
                           rhs_u=rng.standard_normal(vel.num_dofs))
    u, p, _ = solve_saddle(system)
    dense = system.matrix().toarray()
    x = np.linalg.solve(dense, system.rhs())
    assert abs(u - x[:vel.num_dofs]).max() < 1e-10
    # compare pressures after applying the same mean shift
    pd = x[vel.num_dofs:-1]
    ones = constant_field(pres, [1.0]).coeffs
    pd = pd - (system.mean @ pd) / (system.mean @ ones) * ones
    assert abs(p - pd).max() < 1e-10


def test_singular_system_detected(disc4):
    _, vel, pres, ctx = disc4
    bad = SaddleSystem(
        sp.csr_matrix((vel.num_dofs, vel.num_dofs)),
        assemble_pressure_coupling(ctx),
        pressure_mean_vector(ctx),
        np.ones(vel.num_dofs),
        np.zeros(pres.num_dofs),
        constant_field(pres, [1.0]).coeffs)
    with pytest.raises(SingularSystemError):
        solve_saddle(bad)


def test_factor_cache_reuse(disc4, rng):
    _, vel, pres, ctx = disc4
    cache = FactorCache()
    system = stokes_system(ctx, FormConfig(),
                           rhs_u=rng.standard_normal(vel.num_dofs))
    solve_saddle(system, cache=cache)
    assert cache.factorizations == 1
    system2 = stokes_system(ctx, FormConfig(),
                            rhs_u=rng.standard_normal(vel.num_dofs))
    solve_saddle(system2, cache=cache)
    assert cache.factorizations == 1  # same matrix, factorization reused


def test_time_loop_config_validation():
    form = FormConfig()
    with pytest.raises(ValueError):
        TimeLoopConfig(dt=1.0, t_final=2.0, form=form)
    with pytest.raises(ValueError):
        TimeLoopConfig(dt=0.3, t_final=1.0, form=form)  # 1/0.3 not integer
    with pytest.raises(ValueError):
        TimeLoopConfig(dt=0.1, t_final=1.0, form=form, ic_policy="nodal")
    cfg = TimeLoopConfig(dt=0.1, t_final=1.0, form=form)
    assert cfg.num_steps == 10


def test_zero_data_time_loop_stays_zero(disc4):
    _, vel, pres, ctx = disc4
    loop = TimeLoopConfig(dt=0.25, t_final=1.0, form=FormConfig())
    res = backward_euler_run(ctx, loop)
    assert abs(res.velocity).max() == 0.0
    assert abs(res.pressure).max() == 0.0


@pytest.mark.parametrize("dt", [1e-3, 0.1, 0.9])
def test_unforced_energy_decay(disc4, dt):
    _, vel, pres, ctx = disc4

    def u0(p):
        return np.stack([np.sin(np.pi * p[:, 0]) * p[:, 1] * (1 - p[:, 1]),
                         np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])], axis=1)

    start = project_ph(ctx, u0)
    mass = assemble_mass(ctx)
    steps = 5
    loop = TimeLoopConfig(dt=dt, t_final=steps * dt, form=FormConfig(),
                          initial=start,
                          snapshot_times=tuple(dt * i for i in range(1, steps + 1)))
    res = backward_euler_run(ctx, loop)
    norms = [float(np.sqrt(start.coeffs @ (mass @ start.coeffs)))]
    norms += [float(np.sqrt(u @ (mass @ u))) for _, u, _ in res.snapshots]
    assert len(norms) == steps + 1
    for a, b in zip(norms, norms[1:]):
        assert b <= a * (1 + 1e-12)


def test_mass_conservation_along_trajectory(disc4):
    _, vel, pres, ctx = disc4
    ex = get_example("ex1")
    loop = TimeLoopConfig(dt=0.125, t_final=0.5, form=FormConfig(),
                          forcing=ex.forcing, initial=ex.initial_velocity)
    res = backward_euler_run(ctx, loop)
    assert res.constraint_residual <= 1e-8


def test_local_l2_initial_policy(disc4):
    _, vel, pres, ctx = disc4
    ex = get_example("ex1")
    loop = TimeLoopConfig(dt=0.25, t_final=0.25, form=FormConfig(),
                          forcing=ex.forcing, initial=ex.initial_velocity,
                          ic_policy="local_l2")
    res = backward_euler_run(ctx, loop)
    assert np.all(np.isfinite(res.velocity))


def test_per_step_reports(disc4):
    _, vel, pres, ctx = disc4
    ex = get_example("ex1")
    loop = TimeLoopConfig(dt=0.25, t_final=1.0, form=FormConfig(),
                          forcing=ex.forcing, initial=ex.initial_velocity)
    res = backward_euler_run(ctx, loop)
    assert len(res.reports) == 4
    assert all(r.residual <= 1e-10 for r in res.reports)


def test_picard_zero_data(disc4):
    _, _, _, ctx = disc4
    result = steady_picard(ctx, FormConfig())
    assert result.iterations == 1
    assert abs(result.velocity).max() == 0.0


def test_picard_stokes_limit_equals_direct_solve(disc4, rng):
    _, vel, pres, ctx = disc4

    def g(p):
        return np.stack([p[:, 1] * (1 - p[:, 1]), np.zeros(len(p))], axis=1)

    result = steady_picard(ctx, FormConfig(), boundary=g, convection=False)
    assert result.iterations == 1
    u, p, _ = solve_saddle(stokes_system(ctx, FormConfig(), g=g))
    assert np.array_equal(result.velocity, u)
    assert np.array_equal(result.pressure, p)


def test_picard_no_convergence_raises(disc4):
    _, _, _, ctx = disc4
    from dgns.solutions import lid_driven_boundary
    with pytest.raises(NoConvergenceError):
        steady_picard(ctx, FormConfig(eps=-1, sigma=40.0, mu=0.01),
                      boundary=lid_driven_boundary, tol=1e-14, max_iters=2)


def test_manufactured_single_step_accuracy(disc4):
    """One coarse manufactured run lands in the expected error ballpark."""
    _, vel, pres, ctx = disc4
    ex = get_example("ex1")
    loop = TimeLoopConfig(dt=1.0 / 16, t_final=1.0, form=FormConfig(),
                          forcing=ex.forcing, initial=ex.initial_velocity)
    res = backward_euler_run(ctx, loop)
    from dgns.analysis import error_context, l2_error
    err = l2_error(error_context(ctx), res.velocity, ex.velocity, 1.0)
    assert 1e-3 < err < 2e-2
