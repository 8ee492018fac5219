"""Time the numba and numpy kernels, and a full decomposition, on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 750] [--period 50] [--repeat 20]

The first numba call of each kernel pays for compilation (or a cache load);
it is reported separately and excluded from the timings.
"""
import argparse
import time

import numpy as np

from robuststl import _kernels, decompose
from robuststl.synth import SyntheticSpec, generate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=750)
    parser.add_argument("--period", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    y = rng.normal(size=args.n)
    period = args.period
    width_rows = args.n - period
    cases = {
        "bilateral_filter": lambda: _kernels.bilateral_filter(y, 4, 2.0, 0.8),
        "nonlocal_filter": lambda: _kernels.nonlocal_filter(y, period, 2, 5, 2.0, 0.8),
        "window_sum": lambda: _kernels.window_sum(y, period),
        "window_sum_adjoint": lambda: _kernels.window_sum_adjoint(y[:width_rows], period),
        "window_gram_banded": lambda: _kernels.window_gram_banded(np.abs(y[:width_rows]), period, args.n - 1),
    }
    periods = max(3, args.n // period)
    series, _ = generate(SyntheticSpec(period=period, num_periods=periods, seed=0))
    cases["decompose (end to end)"] = lambda: decompose(series)

    backends = _kernels.available_backends()
    print(f"N={args.n} T={period} repeat={args.repeat} backends={backends}")
    results = {}
    for backend in backends:
        _kernels.set_backend(backend)
        for name, fn in cases.items():
            t0 = time.perf_counter()
            fn()
            first = time.perf_counter() - t0
            results[name, backend] = (first, best_of(fn, args.repeat if "decompose" not in name else 3))

    header = f"{'kernel':<24}" + "".join(f"{b + ' (ms)':>14}" for b in backends) + f"{'speedup':>10}"
    print(header)
    for name in cases:
        row = f"{name:<24}" + "".join(f"{results[name, b][1] * 1e3:>14.3f}" for b in backends)
        if {"numba", "numpy"} <= set(backends):
            row += f"{results[name, 'numpy'][1] / results[name, 'numba'][1]:>9.1f}x"
        print(row)
    if "numba" in backends:
        warm = sum(results[name, "numba"][0] for name in cases if "decompose" not in name)
        print(f"first-call overhead (numba, all kernels): {warm:.2f} s")


if __name__ == "__main__":
    main()
