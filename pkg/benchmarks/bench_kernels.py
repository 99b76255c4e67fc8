"""Compare the numba and numpy rate kernels.

Usage::

    python benchmarks/bench_kernels.py [--sizes 32 256 100000] [--repeat 200]
    python benchmarks/bench_kernels.py --pipeline   # end-to-end sweep, both backends

Kernel timings call both backends in-process. The pipeline comparison runs
a short distance sweep in two subprocesses, one with ``THZQKD_DISABLE_NUMBA=1``,
because the backend is fixed at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from thzqkd import kernels

CASES = {
    "h_entropy": lambda t, s: (1.0 + 10.0 * t,),
    "mutual_info": lambda t, s: (t, s, 0.01, 1.0, 1.0, 1.19, 1.0),
    "eve_info_individual": lambda t, s: (t, s, 0.01, 1.0, 2.19, 1.0),
    "symplectic_pair": lambda t, s: (t, s, 2.19, 1.0),
    "conditional_eig": lambda t, s: (t, s, 2.19, 1.0, 0.01, 1.0),
    "individual_approx": lambda t, s: (t, s, 0.01, 1.0, 2.19, 1.0, 1.0, 0.95),
    "collective_approx": lambda t, s: (t, s, 0.01, 1.0, 2.19, 1.0, 1.0, 0.95, False),
}

PIPELINE_SNIPPET = """
import time
from thzqkd import ExperimentConfig, kernels
from thzqkd.experiment import sweep
cfg = ExperimentConfig(trials=20)
sweep(cfg, "distance", [10.0])
t0 = time.perf_counter()
sweep(cfg, "distance", cfg.distance_grid)
print(kernels.BACKEND, time.perf_counter() - t0)
"""


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':22s} {'n':>8s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for n in sizes:
        t = 10 ** rng.uniform(-8, -1, n)
        s = 10 ** rng.uniform(-10, -3, n)
        for name, make in CASES.items():
            args = make(t, s)
            f_np = kernels.BACKENDS["numpy"][name]
            f_nb = kernels.BACKENDS["numba"][name]
            f_nb(*args)  # compile outside the timed region
            a = min(timeit.repeat(lambda: f_np(*args), number=repeat, repeat=3)) / repeat * 1e6
            b = min(timeit.repeat(lambda: f_nb(*args), number=repeat, repeat=3)) / repeat * 1e6
            print(f"{name:22s} {n:8d} {a:10.2f} {b:10.2f} {a / b:8.2f}")


def bench_pipeline():
    for flag in ("0", "1"):
        env = {**os.environ, "THZQKD_DISABLE_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET], env=env,
                             capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"distance sweep, 40 points x 20 trials, 32x32, {backend:5s}: {float(secs):.2f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 256, 100_000])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--pipeline", action="store_true")
    args = ap.parse_args()
    if args.pipeline:
        bench_pipeline()
    else:
        bench_kernels(args.sizes, args.repeat)


if __name__ == "__main__":
    main()
