"""Time the numba and numpy paths of the two hot kernels.

    python benchmarks/bench_accel.py [--repeat 5]

The first numba call (compilation, or cache load) is excluded from timing.
"""
import argparse
import time

import numpy as np

from nonparaxial import _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    rows = []
    for n in (512, 1024, 2048, 4096):
        kern = rng.standard_normal(2 * n - 1) + 1j * rng.standard_normal(2 * n - 1)
        psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        _accel._toeplitz_apply_numba(kern, psi)
        t_nb = best_of(lambda: _accel._toeplitz_apply_numba(kern, psi), args.repeat)
        t_np = best_of(lambda: _accel._toeplitz_apply_numpy(kern, psi), args.repeat)
        gap = np.max(np.abs(_accel._toeplitz_apply_numba(kern, psi) - _accel._toeplitz_apply_numpy(kern, psi)))
        rows.append(("toeplitz_apply", f"n={n}", t_nb, t_np, gap))
    for nq in (4096, 65536):
        k, w = _accel.simpson_nodes(12.0, nq, 0.25)
        dx = np.linspace(-2, 2, 400)
        dt = np.full_like(dx, 1.0)
        _accel._quartic_quadrature_numba(dx[:1], dt[:1], 0.01, k, w)
        t_nb = best_of(lambda: _accel._quartic_quadrature_numba(dx, dt, 0.01, k, w), args.repeat)
        t_np = best_of(lambda: _accel._quartic_quadrature_numpy(dx, dt, 0.01, k, w), args.repeat)
        gap = np.max(np.abs(_accel._quartic_quadrature_numba(dx, dt, 0.01, k, w) - _accel._quartic_quadrature_numpy(dx, dt, 0.01, k, w)))
        rows.append(("quartic_quadrature", f"400 x {nq}", t_nb, t_np, gap))
    print(f"{'kernel':<20}{'size':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, size, t_nb, t_np, gap in rows:
        print(f"{name:<20}{size:<14}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.2f}{gap:>13.2e}")


if __name__ == "__main__":
    main()
