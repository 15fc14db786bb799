"""Time the compiled stepping kernels against the NumPy fallback.

Each scenario builds its operator once, then times the raw kernel entry
points of ``rombox._accel`` (Cython) and ``rombox._accel_py`` (NumPy)
on identical inputs, reporting the best of ``--repeat`` timings and the
speedup.  Outputs of the two implementations are compared before the
table is printed, so the benchmark doubles as a parity check.

Usage::

    python benchmarks/bench_backends.py [--repeat 5] [--quick]
"""

import argparse
import sys
import time

import numpy as np
import scipy.linalg

from rombox import _accel_py
from rombox.backend import csr_parts
from rombox.fom import fom_1d, fom_2d, gaussian_ic_1d, three_gaussian_ic_2d
from rombox.grids import grid_1d, grid_2d

try:
    from rombox import _accel
except ImportError:
    _accel = None


def _limit(u0):
    return 1.0e6 * float(np.max(np.abs(u0)))


def scenario_fom_1d(quick):
    n = 250 if quick else 1000
    steps = 100 if quick else 500
    grid = grid_1d(n)
    fom = fom_1d(grid)
    u0 = gaussian_ic_1d(grid).values
    parts = csr_parts(fom.rhs_matrix)
    args = (*parts, u0, 0.01, steps, steps, _limit(u0), None)
    return f"1D advection rk4 (n={n}, {steps} steps)", "rk4_integrate", args


def scenario_fom_2d(quick):
    n = 64 if quick else 128
    steps = 50 if quick else 200
    grid = grid_2d(n, n)
    fom = fom_2d(grid)
    u0 = three_gaussian_ic_2d(grid).values
    parts = csr_parts(fom.rhs_matrix)
    args = (*parts, u0, 0.01, steps, steps, _limit(u0), None)
    return (f"2D convection-diffusion rk4 ({n}x{n}, {steps} steps)",
            "rk4_integrate", args)


def _reduced_system(r, seed=0):
    """A stable skew system with a random SPD Gram matrix."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((r, r))
    B = 0.5 * (M - M.T)
    G = rng.standard_normal((r, r))
    G = G @ G.T + r * np.eye(r)
    return B, G


def scenario_reduced_rk4(quick):
    r = 60
    steps = 2000 if quick else 10000
    B, G = _reduced_system(r)
    a0 = np.random.default_rng(1).standard_normal(r)
    import scipy.sparse as sp
    parts = csr_parts(sp.csr_matrix(B))
    chol = np.asfortranarray(np.linalg.cholesky(G))
    args = (*parts, a0, 1e-3, steps, steps, _limit(a0), chol)
    return (f"reduced rk4 with gram solve (r={r}, {steps} steps)",
            "rk4_integrate", args)


def scenario_reduced_cn(quick):
    r = 60
    steps = 2000 if quick else 10000
    dt = 1e-3
    B, G = _reduced_system(r, seed=2)
    a0 = np.random.default_rng(3).standard_normal(r)
    import scipy.sparse as sp
    plus = sp.csr_matrix(G + 0.5 * dt * B)
    lu, piv = scipy.linalg.lu_factor(G - 0.5 * dt * B)
    args = (*csr_parts(plus), np.asfortranarray(lu),
            np.ascontiguousarray(piv, dtype=np.int32), a0, steps, steps,
            _limit(a0) * 10)
    return (f"reduced crank-nicolson (r={r}, {steps} steps)",
            "cn_integrate", args)


SCENARIOS = (scenario_fom_1d, scenario_fom_2d, scenario_reduced_rk4,
             scenario_reduced_cn)


def best_time(func, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = func(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timings per scenario; the best is reported")
    parser.add_argument("--quick", action="store_true",
                        help="smaller problems for a fast smoke run")
    args = parser.parse_args(argv)

    if _accel is None:
        print("compiled extension not available; nothing to compare",
              file=sys.stderr)
        return 1

    rows = []
    for build in SCENARIOS:
        label, entry, call_args = build(args.quick)
        t_c, (states_c, stable_c) = best_time(getattr(_accel, entry),
                                              call_args, args.repeat)
        t_p, (states_p, stable_p) = best_time(getattr(_accel_py, entry),
                                              call_args, args.repeat)
        if stable_c != stable_p or not np.allclose(states_c, states_p,
                                                   rtol=1e-10, atol=1e-12):
            print(f"MISMATCH in {label}: backends disagree", file=sys.stderr)
            return 1
        rows.append((label, t_c, t_p, t_p / t_c))

    width = max(len(r[0]) for r in rows)
    print(f"{'scenario':<{width}}  {'compiled':>10}  {'python':>10}  "
          f"{'speedup':>8}")
    for label, t_c, t_p, speed in rows:
        print(f"{label:<{width}}  {t_c * 1e3:>8.2f}ms  {t_p * 1e3:>8.2f}ms  "
              f"{speed:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
