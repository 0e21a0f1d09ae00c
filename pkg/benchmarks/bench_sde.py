"""Benchmark the compiled SDE kernel against the NumPy fallback.

Runs the same Euler-Maruyama ensemble with both back-ends, checks the
results agree bitwise-tightly, and prints a timing table.

Usage: python3 benchmarks/bench_sde.py [--n-traj N] [--repeats R]
"""

import argparse
import time

import numpy as np

from antideph import sdq
from antideph.dynamics import TrajectoryConfig, kernel_backend, simulate_ensemble


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    m = sdq.to_model(sdq.SDQParams(1.0, 1.0, 0.05))
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    cases = [
        ("short (500 steps)", TrajectoryConfig(dt=2e-3, t_end=1.0, n_traj=args.n_traj,
                                               seed=7, record_every=100)),
        ("long (4000 steps)", TrajectoryConfig(dt=5e-4, t_end=2.0, n_traj=args.n_traj,
                                               seed=7, record_every=500)),
        # small chunks: the NumPy fallback cannot amortize per-step
        # overhead here, which is where the compiled kernel pays off
        ("long, chunk=16", TrajectoryConfig(dt=5e-4, t_end=2.0, n_traj=args.n_traj,
                                            seed=7, record_every=500, chunk_size=16)),
    ]

    try:
        kernel_backend("cython")
        backends = ["numpy", "cython"]
    except RuntimeError:
        print("compiled kernel not available; benchmarking numpy only")
        backends = ["numpy"]

    print(f"n_traj = {args.n_traj}, best of {args.repeats} runs\n")
    print(f"{'case':<20} " + "".join(f"{b + ' [s]':>14}" for b in backends) +
          ("       speedup" if len(backends) == 2 else ""))
    for name, cfg in cases:
        times = []
        results = []
        for b in backends:
            res = simulate_ensemble(m, rho0, cfg, kernel=b)
            results.append(res.mean)
            times.append(_time(lambda b=b: simulate_ensemble(m, rho0, cfg, kernel=b),
                                args.repeats))
        if len(results) == 2:
            dev = float(np.max(np.abs(results[0] - results[1])))
            assert dev < 1e-12, f"backend mismatch {dev:.3e}"
        row = f"{name:<20} " + "".join(f"{t:>14.3f}" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>12.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
