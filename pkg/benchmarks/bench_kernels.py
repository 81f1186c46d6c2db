"""Timing comparison of the numba and numpy assembly backends.

Usage: python benchmarks/bench_kernels.py [--n 32,64] [--repeats 20]

The convection kernels are the per-time-step hot path; the one-time
operators are included for completeness.  Numba warm-up (JIT compilation)
is excluded from the timings.
"""

import argparse
import os
import time

import numpy as np


def time_call(fn, repeats):
    fn()  # warm-up (JIT compile on the numba path)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench(n, repeats):
    from dgns.forms import (AssemblyContext, FormConfig, assemble_convection,
                            assemble_diffusion, assemble_mass, assemble_penalty,
                            assemble_pressure_coupling)
    from dgns.mesh import build_uniform_mesh
    from dgns.space import BrokenSpace

    mesh = build_uniform_mesh(n)
    vel = BrokenSpace(mesh, 1, 2)
    pres = BrokenSpace(mesh, 0, 1)
    ctx = AssemblyContext(mesh, vel, pres)
    w = np.random.default_rng(0).standard_normal(vel.num_dofs)
    form = FormConfig()

    cases = {
        "convection (per step)": lambda: assemble_convection(ctx, w),
        "diffusion": lambda: assemble_diffusion(ctx, form),
        "penalty": lambda: assemble_penalty(ctx, form.sigma),
        "mass": lambda: assemble_mass(ctx),
        "pressure coupling": lambda: assemble_pressure_coupling(ctx),
    }

    results = {}
    for backend in ("numpy", "numba"):
        os.environ["DGNS_BACKEND"] = backend
        for label, fn in cases.items():
            results.setdefault(label, {})[backend] = time_call(fn, repeats)

    print(f"\nmesh n={n} ({mesh.num_triangles} triangles, "
          f"{vel.num_dofs} velocity dofs), {repeats} repeats")
    print(f"{'kernel':<24} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, times in results.items():
        ratio = times["numpy"] / times["numba"]
        print(f"{label:<24} {times['numpy'] * 1e3:9.2f}ms {times['numba'] * 1e3:9.2f}ms "
              f"{ratio:7.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=str, default="16,32,64")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    try:
        import numba  # noqa: F401
    except ImportError:
        raise SystemExit("numba is not installed; nothing to compare")
    for n in (int(v) for v in args.n.split(",")):
        bench(n, args.repeats)


if __name__ == "__main__":
    main()
