"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--order 30] [--steps 20000] [--repeat 5]

Each kernel is called once before timing so JIT compilation is excluded;
the table reports the median wall time and the largest difference between
the two paths' outputs, relative to the largest output entry.
"""

import argparse
import statistics
import time

import numpy as np

from qprenorm import _kernels
from qprenorm.analytic import sample_matrix, taylor_at_zero_matrix
from qprenorm.qp import ModeAction, section_functional
from qprenorm.rotation import RotationNumber
from qprenorm.spectral import fixed_point


def timed(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.ndim == 0:
        return float(abs(a - b))
    mask = np.isfinite(a) & np.isfinite(b)
    if not mask.any():
        return 0.0
    scale = max(float(np.max(np.abs(a[mask]))), 1e-300)
    return float(np.max(np.abs(a[mask] - b[mask]))) / scale


def cases(order, steps):
    act = ModeAction(fixed_point(order))
    d, n = act.domain, act.order
    L1, L2 = np.ascontiguousarray(act.L1), np.ascontiguousarray(act.L2)
    V = np.ascontiguousarray(sample_matrix(d, n))
    mono = np.ascontiguousarray(taylor_at_zero_matrix(d, n))
    e0 = section_functional(d, n)
    om = RotationNumber("golden").orbit(steps + 1)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(n + 1), rng.standard_normal(n + 1)
    w = rng.standard_normal(n + 1) * 0.5 ** np.arange(n + 1)
    p = rng.standard_normal(n + 1)
    cidx = np.array([0, 2, 4], dtype=np.int64)
    return {
        "trunc_mul": lambda k: k.trunc_mul(p, w, n),
        "compose": lambda k: k.compose(p, w, n),
        "power_table": lambda k: k.power_table(w, n),
        "pair_orbit(full)": lambda k: k.pair_orbit(L1, L2, V, e0, mono, om, u, v, 0, False, cidx)[:3],
        "pair_orbit(section)": lambda k: k.pair_orbit(L1, L2, V, e0, mono, om, u, v, 0, True, cidx)[:3],
        "ratio_orbit": lambda k: k.ratio_orbit(L1, L2, V, om, u, v, u, v),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=30)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"order {args.order}, orbit steps {args.steps}, median of {args.repeat}")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'rel diff':>12}")
    for name, fn in cases(args.order, args.steps).items():
        t_np = timed(lambda: fn(_kernels.numpy_kernels), args.repeat)
        t_nb = timed(lambda: fn(_kernels.numba_kernels), args.repeat)
        diff = max_diff(fn(_kernels.numpy_kernels), fn(_kernels.numba_kernels))
        print(f"{name:<22}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
