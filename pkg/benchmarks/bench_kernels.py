"""Compiled vs NumPy propagator kernels, alone and inside a full solver step.

    python benchmarks/bench_kernels.py [--n 64] [--repeat 20]
"""

import argparse
import time

import numpy as np

from nsmlimit import kernels
from nsmlimit.initial import make_initial_state
from nsmlimit.integrator import StepperConfig, get_solver
from nsmlimit.spectral import build_grid
from nsmlimit.systems import Params


def best_of(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if kernels.compiled_kernels is None:
        print("compiled extension not built; only the NumPy path is available")
    backends = {"numpy": kernels.numpy_kernels}
    if kernels.compiled_kernels is not None:
        backends["cython"] = kernels.compiled_kernels

    grid = build_grid(2, args.n)
    params = Params(eps=0.05)
    solver = get_solver(grid, params, "eqnsm", StepperConfig(dt=5e-3))
    nm, q = solver.ms.nmodes, solver._blocks.shape[1]
    rng = np.random.default_rng(0)
    A, P = rand_c(rng, nm, q, q), rand_c(rng, nm, q, q)
    x, y = rand_c(rng, q, nm), rand_c(rng, q, nm)
    a, b = rng.standard_normal(nm), rng.standard_normal(nm)
    xs, ys = rand_c(rng, 3, nm), rand_c(rng, 3, nm)

    print(f"n={args.n}  modes={nm}  block={q}x{q}  best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{k:>12}" for k in backends))
    rows = {
        "block_matvec": lambda k: k["block_matvec"](A, x),
        "etd_combine": lambda k: k["etd_combine"](A, x, P, y, 1e-3),
        "scalar_combine": lambda k: k["scalar_combine"](a, xs, b, ys, 1e-3),
    }
    for name, call in rows.items():
        times = [best_of(lambda k=k: call(k), args.repeat) for k in backends.values()]
        print(f"{name:<16}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times))

    state = make_initial_state(grid, params, "random", seed=0, target_energy=0.01)
    Y = solver.compress(state)
    solver.propagator(5e-3)
    saved = kernels._active
    times = []
    for k in backends.values():
        kernels._active = k
        times.append(best_of(lambda: solver.step(Y, 5e-3), max(3, args.repeat // 4)))
    kernels._active = saved
    print(f"{'full step':<16}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times))


if __name__ == "__main__":
    main()
