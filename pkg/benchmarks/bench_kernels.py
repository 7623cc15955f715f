#!/usr/bin/env python3
"""Time one propagation of the on-resonance preset with the numba and numpy kernels.

    python benchmarks/bench_kernels.py --n-v 161 --repeats 3

The numba timing excludes the first (compiling) call. The two backends must
agree to rounding; the script reports the largest relative difference.
"""

import argparse
import statistics
import time
import warnings

import numpy as np

from laddermem._accel import HAVE_NUMBA
from laddermem.config import load_scenario
from laddermem.solver import propagate


def timed(scenario, backend, repeats):
    times, rec = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        rec = propagate(scenario, backend=backend)
        times.append(time.perf_counter() - t0)
    return times, rec


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="flame2_on_res")
    p.add_argument("--n-v", type=int, default=161, help="velocity nodes (the default grid is ~1160)")
    p.add_argument("--n-z", type=int, default=None)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--skip-numpy", action="store_true")
    args = p.parse_args(argv)
    warnings.simplefilter("ignore")

    s = load_scenario(args.scenario).replace("solver.n_v", args.n_v)
    if args.n_z:
        s = s.replace("solver.n_z", args.n_z)
    print(f"scenario {s.name}: n_v={args.n_v} n_z={s.solver.n_z} dt={s.solver.dt * 1e12:.0f} ps")

    results = {}
    if HAVE_NUMBA:
        t0 = time.perf_counter()
        propagate(s, backend="numba")
        print(f"numba  first call (incl. compile/cache load) {time.perf_counter() - t0:8.3f} s")
        results["numba"] = timed(s, "numba", args.repeats)
    else:
        print("numba unavailable or disabled (LADDERMEM_DISABLE_NUMBA); timing numpy only")
    if not args.skip_numpy:
        results["numpy"] = timed(s, "numpy", args.repeats)

    for name, (times, _) in results.items():
        print(f"{name:<6} median {statistics.median(times):8.3f} s  (min {min(times):.3f}, n={len(times)})")
    if len(results) == 2:
        a, b = results["numba"][1].output_intensity, results["numpy"][1].output_intensity
        speedup = statistics.median(results["numpy"][0]) / statistics.median(results["numba"][0])
        print(f"speed-up numba/numpy {speedup:.1f}x; max relative difference "
              f"{np.max(np.abs(a - b)) / np.max(np.abs(a)):.1e}")


if __name__ == "__main__":
    main()
