"""Experiment orchestration and command-line entry points.

Subcommands: convergence (manufactured-solution sweeps), run (single
manufactured run), cavity (lid-driven benchmark, unsteady + steady),
steady (Picard solve only), verify (property suite).  Configuration comes
from an optional flat `key = value` file plus command-line overrides; every
run echoes its full configuration into run_metadata.txt in a form the
parser accepts back.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

import argparse
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .analysis import (ConvergenceTable, ErrorTriple, broken_energy_error,
                       discrete_l2_norm, eoc, error_context,
                       interpolant_comparison_errors, l2_error,
                       pressure_l2_error)
from .errors import DGNSError, NoConvergenceError
from .forms import AssemblyContext, FormConfig
from .io_vtk import write_vtk_fields, write_vtk_mesh
from .kernels import backend_name
from .mesh import build_uniform_mesh, mesh_regularity
from .solutions import get_example, lid_driven_boundary
from .solver import TimeLoopConfig, backward_euler_run, steady_picard
from .space import BrokenField, BrokenSpace
from .verification import run_property_suite


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """One experiment description; defaults reproduce the baseline sweeps."""

    kind: str = "convergence"           # convergence | single | cavity | steady
    example: str = "ex1"                # ex1 | ex2 | cavity
    eps: int = -1
    sigma: float = 10.0
    mu: float = 1.0
    k: int = 1
    kp: int = 0
    n_list: tuple = (4, 8, 16, 32)
    dt_policy: str = "h2"               # "h2" or "explicit"
    dt: float = None                    # required for explicit policy
    t_final: float = 1.0
    rtol: float = 1e-10
    picard_tol: float = 1e-8
    picard_max_iters: int = 100
    outdir: str = "out"
    seed: int = 0
    vtk: bool = False
    dump_mesh: bool = False
    snapshots: tuple = ()  # times at which run/cavity dump VTK states
    slow: bool = False

    def validate(self):
        if self.kind not in ("convergence", "single", "cavity", "steady"):
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.kind in ("cavity", "steady"):
            if self.example != "cavity":
                raise ConfigError(f"{self.kind} runs use the cavity example")
        elif self.example == "cavity":
            raise ConfigError("cavity data has no manufactured forcing; "
                              "use kind=cavity or kind=steady")
        if self.dt_policy not in ("h2", "explicit"):
            raise ConfigError("dt_policy must be 'h2' or 'explicit'")
        if self.dt_policy == "explicit" and (self.dt is None or self.dt <= 0):
            raise ConfigError("explicit dt policy needs a positive dt")
        for name in ("sigma", "mu", "t_final", "rtol", "picard_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.k < 1 or self.kp < 0 or self.kp > self.k:
            raise ConfigError("need k >= 1 and 0 <= kp <= k")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("mesh sizes must be positive")
        if self.eps not in (-1, 1):
            raise ConfigError("eps must be -1 (SIPG) or +1 (NIPG)")
        return self

    def form(self):
        return FormConfig(eps=self.eps, sigma=self.sigma, mu=self.mu)

    def step_size(self, n):
        if self.dt_policy == "h2":
            return 1.0 / n**2
        return self.dt


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}


def config_to_lines(cfg: RunConfig):
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            if not value:
                continue
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return lines


def parse_config_lines(lines, base: RunConfig = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, value)
    return replace(cfg, **values)


def _parse_value(key, text):
    kind = _CONFIG_TYPES[key]
    try:
        if key == "n_list":
            return tuple(int(v) for v in text.split(","))
        if key == "snapshots":
            return tuple(float(v) for v in text.split(",")) if text else ()
        if kind in ("int", int):
            return int(text)
        if kind in ("float", float):
            return float(text)
        if kind in ("bool", bool):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


# -- shared run machinery ----------------------------------------------------

@dataclass
class Discretization:
    mesh: object
    vel_space: BrokenSpace
    pres_space: BrokenSpace
    ctx: AssemblyContext


def _discretize(cfg: RunConfig, n: int) -> Discretization:
    mesh = build_uniform_mesh(n)
    vel = BrokenSpace(mesh, cfg.k, 2)
    pres = BrokenSpace(mesh, cfg.kp, 1)
    return Discretization(mesh, vel, pres, AssemblyContext(mesh, vel, pres))


def _march(cfg: RunConfig, disc: Discretization, n: int, snapshots=()):
    ex = get_example(cfg.example)
    loop = TimeLoopConfig(dt=cfg.step_size(n), t_final=cfg.t_final,
                          form=cfg.form(), forcing=ex.forcing,
                          initial=ex.initial_velocity, rtol=cfg.rtol,
                          snapshot_times=tuple(snapshots))
    return ex, loop, backward_euler_run(disc.ctx, loop)


def _dump_snapshots(cfg, outdir, disc, result, tag):
    if not cfg.vtk:
        return
    for t, u, p in result.snapshots:
        write_vtk_fields(Path(outdir) / f"{tag}_t{t:g}.vtk",
                         BrokenField(disc.vel_space, u),
                         BrokenField(disc.pres_space, p), title=f"{tag} t={t:g}")


def _error_triple(cfg, disc, n, ex, result):
    ectx = error_context(disc.ctx)
    return ErrorTriple(
        h=1.0 / n, dt=cfg.step_size(n),
        energy=broken_energy_error(ectx, result.velocity, ex, cfg.t_final, cfg.sigma),
        l2=l2_error(ectx, result.velocity, ex.velocity, cfg.t_final),
        pressure=pressure_l2_error(ectx, result.pressure, ex.pressure, cfg.t_final))


def _write_metadata(cfg: RunConfig, outdir: Path, extra_lines, reports=None):
    lines = ["# run metadata (config echo below parses back into a run)"]
    lines += config_to_lines(cfg)
    lines.append(f"# backend: {backend_name()}")
    lines.append("# mesh_pattern: bottom-left to top-right cell diagonal")
    lines += [f"# {line}" for line in extra_lines]
    if reports:
        for i, rep in enumerate(reports, 1):
            lines.append(f"# step_residual[{i}] = {rep.residual:.6e} "
                         f"refine_iters={rep.iterations}")
    (outdir / "run_metadata.txt").write_text("\n".join(lines) + "\n")


def _maybe_dump(cfg, outdir, disc, vel, pres, tag):
    if cfg.dump_mesh:
        write_vtk_mesh(outdir / "mesh.vtk", disc.mesh)
    if cfg.vtk:
        write_vtk_fields(outdir / f"{tag}.vtk",
                         BrokenField(disc.vel_space, vel),
                         BrokenField(disc.pres_space, pres), title=tag)


# -- subcommand drivers -------------------------------------------------------

def run_convergence(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = []
    notes = []
    for n in cfg.n_list:
        disc = _discretize(cfg, n)
        try:
            start = time.perf_counter()
            ex, loop, result = _march(cfg, disc, n)
            triple = _error_triple(cfg, disc, n, ex, result)
            grad_i, l2_i, p_i = interpolant_comparison_errors(
                error_context(disc.ctx), result.velocity, result.pressure,
                ex, cfg.t_final)
            rows.append((n, triple, (grad_i, l2_i, p_i)))
            notes.append(f"n={n}: steps={loop.num_steps} "
                         f"elapsed={time.perf_counter() - start:.2f}s "
                         f"constraint_residual={result.constraint_residual:.3e}")
        except DGNSError as exc:
            failures.append((n, str(exc)))
            rows.append((n, None, None))
            notes.append(f"n={n}: FAILED ({exc})")

    csv_lines = [",".join(ConvergenceTable.COLUMNS)]
    prev = None
    for n, triple, _ in rows:
        if triple is None:
            csv_lines.append(f"{1.0 / n:.12g},failed,,failed,,failed,")
            prev = None
            continue
        rates = ["", "", ""]
        if prev is not None:
            rates = [f"{r:.4f}" for r in (
                eoc([prev.energy, triple.energy])[0],
                eoc([prev.l2, triple.l2])[0],
                eoc([prev.pressure, triple.pressure])[0])]
        csv_lines.append(
            f"{triple.h:.12g},{triple.energy:.12e},{rates[0]},"
            f"{triple.l2:.12e},{rates[1]},{triple.pressure:.12e},{rates[2]}")
        prev = triple
    (outdir / "convergence.csv").write_text("\n".join(csv_lines) + "\n")

    good = [t for _, t, _ in rows if t is not None]
    if len(good) == len(rows) and len(good) >= 1:
        print(ConvergenceTable(good))
    else:
        print("\n".join(csv_lines))
    interp_lines = [
        f"interpolant-comparison n={n}: grad={g:.6e} l2={l:.6e} p={p:.6e}"
        for (n, t, extra) in rows if extra is not None
        for (g, l, p) in [extra]]
    _write_metadata(cfg, outdir, notes + interp_lines)
    for n, msg in failures:
        print(f"row n={n} failed: {msg}", file=sys.stderr)
    return 1 if failures else 0


def run_single(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = cfg.n_list[0]
    disc = _discretize(cfg, n)
    try:
        ex, loop, result = _march(cfg, disc, n, snapshots=cfg.snapshots)
    except DGNSError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        _write_metadata(cfg, outdir, [f"FAILED: {exc}"])
        return 1
    triple = _error_triple(cfg, disc, n, ex, result)
    print(f"n={n} dt={loop.dt:g} steps={loop.num_steps} "
          f"mesh_regularity={mesh_regularity(disc.mesh):.4f}")
    print(f"energy_err={triple.energy:.6e} l2_err={triple.l2:.6e} "
          f"p_err={triple.pressure:.6e}")
    _maybe_dump(cfg, outdir, disc, result.velocity, result.pressure, "state")
    _dump_snapshots(cfg, outdir, disc, result, "state")
    _write_metadata(cfg, outdir,
                    [f"errors: energy={triple.energy:.12e} l2={triple.l2:.12e} "
                     f"pressure={triple.pressure:.12e}"],
                    reports=result.reports)
    return 0


def _centerline_points(n_samples=101):
    s = np.linspace(0.0, 1.0, n_samples)
    vertical = np.column_stack([np.full_like(s, 0.5), s])    # (0.5, y)
    horizontal = np.column_stack([s, np.full_like(s, 0.5)])  # (x, 0.5)
    return s, vertical, horizontal


def _write_centerlines(outdir, disc, unsteady, steady, steady_ok):
    s, vertical, horizontal = _centerline_points()
    uv, pv = unsteady
    u_field = BrokenField(disc.vel_space, uv)
    p_field = BrokenField(disc.pres_space, pv)
    u1_un = u_field.eval(vertical)[:, 0]
    u2_un = u_field.eval(horizontal)[:, 1]
    p_un = p_field.eval(horizontal)[:, 0]
    if steady_ok:
        sv, sp = steady
        su_field = BrokenField(disc.vel_space, sv)
        sp_field = BrokenField(disc.pres_space, sp)
        u1_st = su_field.eval(vertical)[:, 0]
        u2_st = su_field.eval(horizontal)[:, 1]
        p_st = sp_field.eval(horizontal)[:, 0]
    else:
        u1_st = u2_st = p_st = np.full_like(s, np.nan)

    def dump(name, coord_name, coord, a, b, col):
        lines = [f"{coord_name},{col}_unsteady,{col}_steady"]
        lines += [f"{c:.12g},{x:.12e},{y:.12e}" for c, x, y in zip(coord, a, b)]
        (Path(outdir) / name).write_text("\n".join(lines) + "\n")

    dump("centerline_u1.csv", "y", s, u1_un, u1_st, "u1")
    dump("centerline_u2.csv", "x", s, u2_un, u2_st, "u2")
    dump("centerline_p.csv", "x", s, p_un, p_st, "p")


def run_cavity(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = cfg.n_list[0]
    disc = _discretize(cfg, n)
    dt = cfg.step_size(n)
    loop = TimeLoopConfig(dt=dt, t_final=cfg.t_final, form=cfg.form(),
                          boundary=lid_driven_boundary, rtol=cfg.rtol,
                          snapshot_times=tuple(cfg.snapshots))
    notes = [f"cavity dt={dt} (backward Euler is unconditionally stable; "
             "the steady state at large T does not depend on dt)"]
    try:
        result = backward_euler_run(disc.ctx, loop)
    except DGNSError as exc:
        print(f"cavity time march failed: {exc}", file=sys.stderr)
        _write_metadata(cfg, outdir, notes + [f"FAILED: {exc}"])
        return 1
    _dump_snapshots(cfg, outdir, disc, result, "cavity")

    steady_ok = True
    steady_state = None
    try:
        steady = steady_picard(disc.ctx, cfg.form(), boundary=lid_driven_boundary,
                               tol=cfg.picard_tol, max_iters=cfg.picard_max_iters,
                               rtol=cfg.rtol)
        steady_state = (steady.velocity, steady.pressure)
        gap = discrete_l2_norm(disc.mesh, result.velocity - steady.velocity)
        scale = max(discrete_l2_norm(disc.mesh, steady.velocity), 1e-300)
        notes.append(f"picard iterations: {steady.iterations}")
        notes.append(f"unsteady(T={cfg.t_final}) vs steady relative L2 gap: "
                     f"{gap / scale:.6e}")
        print(f"unsteady vs steady relative L2 gap: {gap / scale:.3e} "
              f"(picard iterations {steady.iterations})")
    except NoConvergenceError as exc:
        steady_ok = False
        notes.append(f"picard did not converge: {exc}")
        print(f"warning: steady iteration did not converge ({exc}); "
              "centerlines carry only the unsteady state", file=sys.stderr)

    _write_centerlines(outdir, disc, (result.velocity, result.pressure),
                       steady_state, steady_ok)
    _maybe_dump(cfg, outdir, disc, result.velocity, result.pressure, "cavity_unsteady")
    if cfg.vtk and steady_ok:
        write_vtk_fields(Path(outdir) / "cavity_steady.vtk",
                         BrokenField(disc.vel_space, steady_state[0]),
                         BrokenField(disc.pres_space, steady_state[1]),
                         title="cavity_steady")
    _write_metadata(cfg, outdir, notes, reports=result.reports)
    return 0


def run_steady(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = cfg.n_list[0]
    disc = _discretize(cfg, n)
    try:
        steady = steady_picard(disc.ctx, cfg.form(), boundary=lid_driven_boundary,
                               tol=cfg.picard_tol, max_iters=cfg.picard_max_iters,
                               rtol=cfg.rtol)
    except DGNSError as exc:
        print(f"steady solve failed: {exc}", file=sys.stderr)
        _write_metadata(cfg, outdir, [f"FAILED: {exc}"])
        return 1
    print(f"steady cavity solved in {steady.iterations} picard iterations")
    s, vertical, horizontal = _centerline_points()
    u_field = BrokenField(disc.vel_space, steady.velocity)
    p_field = BrokenField(disc.pres_space, steady.pressure)
    for name, coord_name, coord, vals in (
            ("centerline_u1.csv", "y", s, u_field.eval(vertical)[:, 0]),
            ("centerline_u2.csv", "x", s, u_field.eval(horizontal)[:, 1]),
            ("centerline_p.csv", "x", s, p_field.eval(horizontal)[:, 0])):
        lines = [f"{coord_name},{name.split('_')[1].split('.')[0]}_steady"]
        lines += [f"{c:.12g},{v:.12e}" for c, v in zip(coord, vals)]
        (outdir / name).write_text("\n".join(lines) + "\n")
    _maybe_dump(cfg, outdir, disc, steady.velocity, steady.pressure, "steady")
    _write_metadata(cfg, outdir, [f"picard iterations: {steady.iterations}"])
    return 0


def run_verify(seed: int) -> int:
    results = run_property_suite(seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed (seed {seed})")
    return 1 if failed else 0


# -- argument parsing ----------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dgns",
        description="Interior-penalty DG solver for 2D incompressible flow")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, help="flat key = value config file")
        p.add_argument("--example", choices=("ex1", "ex2", "cavity"))
        p.add_argument("--n", type=str, help="comma-separated mesh subdivisions")
        p.add_argument("--eps", type=int, choices=(-1, 1))
        p.add_argument("--sigma", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--kp", type=int)
        p.add_argument("--dt-policy", choices=("h2", "explicit"), dest="dt_policy")
        p.add_argument("--dt", type=float)
        p.add_argument("--T", type=float, dest="t_final")
        p.add_argument("--rtol", type=float)
        p.add_argument("--picard-tol", type=float, dest="picard_tol")
        p.add_argument("--picard-max-iters", type=int, dest="picard_max_iters")
        p.add_argument("--out", type=str, dest="outdir")
        p.add_argument("--seed", type=int)
        p.add_argument("--vtk", action="store_true", default=None)
        p.add_argument("--dump-mesh", action="store_true", default=None,
                       dest="dump_mesh")
        p.add_argument("--snapshots", type=str,
                       help="comma-separated times for VTK state dumps")

    for name in ("convergence", "run", "cavity", "steady"):
        add_common(sub.add_parser(name))
    verify = sub.add_parser("verify")
    verify.add_argument("--seed", type=int, default=0)
    return parser


_KIND_BY_COMMAND = {"convergence": "convergence", "run": "single",
                    "cavity": "cavity", "steady": "steady"}


def build_config(args) -> RunConfig:
    cfg = RunConfig(kind=_KIND_BY_COMMAND[args.command])
    if args.command in ("cavity", "steady"):
        cfg = replace(cfg, example="cavity", n_list=(32,), sigma=40.0,
                      mu=0.01, t_final=75.0, dt_policy="explicit", dt=0.1)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config_lines(path.read_text().splitlines(), cfg)
        cfg = replace(cfg, kind=_KIND_BY_COMMAND[args.command])
    overrides = {}
    for name in ("example", "eps", "sigma", "mu", "k", "kp", "dt_policy", "dt",
                 "t_final", "rtol", "picard_tol", "picard_max_iters", "outdir",
                 "seed", "vtk", "dump_mesh"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "n", None):
        try:
            overrides["n_list"] = tuple(int(v) for v in args.n.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --n list: {args.n!r}") from exc
    if getattr(args, "snapshots", None):
        try:
            overrides["snapshots"] = tuple(float(v) for v in args.snapshots.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --snapshots list: {args.snapshots!r}") from exc
    if "dt" in overrides and "dt_policy" not in overrides:
        overrides["dt_policy"] = "explicit"
    return replace(cfg, **overrides).validate()


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return run_verify(args.seed)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    driver = {"convergence": run_convergence, "single": run_single,
              "cavity": run_cavity, "steady": run_steady}[cfg.kind]
    return driver(cfg)


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
