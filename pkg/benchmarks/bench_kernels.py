"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]

Runs on the reference single-atom system (dimension 401). The first numba
call compiles (or loads from cache) and is reported separately.
"""

import argparse
import time
import timeit

import numpy as np

from cavity1d import _kernels as k
from cavity1d.model import build_hamiltonian, single_atom_config
from cavity1d.observables import SpatialGrid


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000, help="RK4 steps per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    system = single_atom_config()
    h = build_hamiltonian(system)
    x0 = np.zeros(system.dimension, np.complex128)
    x0[0] = 1.0
    rk_args = (h.atom_frequencies, h.mode_frequencies, np.ascontiguousarray(h.couplings), x0, 1e-4, args.steps)

    grid = SpatialGrid.uniform(system.modes.cavity_length)
    rng = np.random.default_rng(0)
    weights = rng.standard_normal(system.modes.mode_count) + 1j * rng.standard_normal(system.modes.mode_count)
    fs_args = (grid.points, system.modes.wavenumbers, weights)

    rows = []
    for name, numba_fn, numpy_fn, fargs in [
        (f"rk4_advance ({args.steps} steps, dim {system.dimension})", k.rk4_advance_numba, k.rk4_advance_numpy, rk_args),
        (f"field_sum ({len(grid.points)} points x {system.modes.mode_count} modes)", k.field_sum_numba, k.field_sum_numpy, fs_args),
    ]:
        t_np = _best(lambda: numpy_fn(*fargs), args.repeat)
        if numba_fn is None:
            rows.append((name, t_np, None, None, None))
            continue
        t0 = time.perf_counter()
        first = numba_fn(*fargs)
        t_first = time.perf_counter() - t0
        t_nb = _best(lambda: numba_fn(*fargs), args.repeat)
        diff = float(np.max(np.abs(first - numpy_fn(*fargs))))
        rows.append((name, t_np, t_first, t_nb, diff))

    print(f"{'kernel':52s} {'numpy':>10s} {'numba 1st':>10s} {'numba':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, t_np, t_first, t_nb, diff in rows:
        if t_nb is None:
            print(f"{name:52s} {t_np:10.4f} {'n/a':>10s} {'n/a':>10s}")
            continue
        print(f"{name:52s} {t_np:10.4f} {t_first:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
