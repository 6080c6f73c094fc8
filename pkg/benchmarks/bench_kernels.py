"""Time the numba kernels against their numpy reference implementations.

    python3 benchmarks/bench_kernels.py --sites 8 10 --repeat 5

The first numba call per signature compiles (or loads from cache); it is done
once up front and excluded from the timings.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from latticetherm._kernels import numba_impl, numpy_impl


def _cases(n: int, rng):
    D = 2**n
    term = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    positions = np.array([n // 2 - 1, n // 2], dtype=np.int64)
    mat = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    keep = np.arange(n // 2 - 2, n // 2 + 2, dtype=np.int64)
    evals = np.sort(rng.standard_normal(D))

    def accumulate(impl):
        out = np.zeros((D, D), dtype=np.complex128)
        for _ in range(n - 1):
            impl.accumulate_local(out, term, positions, 2, n, 1.0)
        return out

    return {
        "accumulate_local": accumulate,
        "partial_trace": lambda impl: impl.partial_trace_matrix(mat, keep, 2, n),
        "dephasing": lambda impl: impl.dephasing_factors(evals, 10.0, 1e-10),
        "trapezoid": lambda impl: impl.trapezoid_phase_average(evals[: min(D, 256)], 10.0, 200),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sites", type=int, nargs="+", default=[6, 8, 10])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'sites':>6}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>10}{'max diff':>11}")
    for n in args.sites:
        for name, fn in _cases(n, rng).items():
            ref, fast = fn(numpy_impl), fn(numba_impl)  # also warms up the jit
            diff = float(np.abs(ref - fast).max())
            t_np = min(timeit.repeat(lambda: fn(numpy_impl), number=1, repeat=args.repeat)) * 1e3
            t_nb = min(timeit.repeat(lambda: fn(numba_impl), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<18}{n:>6}{t_np:>13.3f}{t_nb:>13.3f}{t_np / t_nb:>10.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
