"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends run the same inputs; results are checked for agreement before
timings are printed. Numba compile time is excluded by a warm-up call.
"""

import argparse
import time

import numpy as np

from qslp import statistics as st
from qslp.solver import SolverConfig, run


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_solver(repeat):
    cfg = SolverConfig()
    timings = {}
    outs = {}
    for backend in ("numba", "numpy"):
        run(SolverConfig(t_max=2e-6), "slow_light", backend=backend)  # warm-up
        timings[backend], outs[backend] = best_of(
            lambda: run(cfg, "eit_plus_qslp", backend=backend), repeat
        )
    err = np.max(np.abs(outs["numba"].e_plus_out - outs["numpy"].e_plus_out))
    scale = np.max(np.abs(outs["numpy"].e_plus_out))
    return timings, err / scale


def bench_histogram(repeat):
    h, s = st.monte_carlo_events(st.PairSourceModel(noise_floor=1e-4), 1_000_000, seed=3)
    timings = {}
    outs = {}
    for backend in ("numba", "numpy"):
        st.build_histogram(h[:100], s[:100], backend=backend)
        timings[backend], outs[backend] = best_of(
            lambda: st.build_histogram(h, s, n_blocks=50, backend=backend), repeat
        )
    same = np.array_equal(outs["numba"].block_counts, outs["numpy"].block_counts)
    return timings, same, h.size


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    t, rel = bench_solver(args.repeat)
    print(f"solver eit_plus_qslp (nz=200, 12000 steps), max rel diff {rel:.1e}")
    for k, v in t.items():
        print(f"  {k:6s} {v:8.3f} s")
    print(f"  speed-up {t['numpy'] / t['numba']:.1f}x")

    t, same, n = bench_histogram(args.repeat)
    print(f"pair histogram ({n} heralds, 100 us span, 20 ns bins), identical counts: {same}")
    for k, v in t.items():
        print(f"  {k:6s} {v:8.3f} s")
    print(f"  speed-up {t['numpy'] / t['numba']:.1f}x")


if __name__ == "__main__":
    main()
