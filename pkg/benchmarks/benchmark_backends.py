"""Compare the compiled stepping core against the NumPy fallback.

Usage: python3 benchmarks/benchmark_backends.py [--t-final T]

Times `simulate` for representative workloads on both backends and prints a
table with the speedup.  The all-to-all rows use the O(N) order-parameter
kernel; the network rows exercise the O(N^2) capacity-matrix path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from kuramoto_inertia import (
    COMPILED_AVAILABLE,
    IntegratorConfig,
    ModelParams,
    OscillatorEnsemble,
    simulate,
)


def make_case(n: int, all_to_all: bool, seed: int = 0):
    rng = np.random.default_rng(seed)
    if all_to_all:
        params = ModelParams.all_to_all(n, mass=0.5, friction=1.0, coupling=0.5)
    else:
        cap = rng.uniform(0.0, 1.0, (n, n))
        params = ModelParams(masses=rng.uniform(0.5, 1.5, n),
                             frictions=rng.uniform(0.8, 1.2, n),
                             natural_freqs=np.zeros(n), coupling=0.5,
                             capacity=0.5 * (cap + cap.T) / n)
    init = OscillatorEnsemble(theta=rng.uniform(-1, 1, n),
                              omega=rng.uniform(-0.2, 0.2, n))
    return init, params


def run_case(name, init, params, config):
    times = {}
    for backend in ("python", "compiled") if COMPILED_AVAILABLE else ("python",):
        t0 = time.perf_counter()
        traj = simulate(init, params, config, backend=backend)
        times[backend] = time.perf_counter() - t0
        checksum = float(np.sum(traj.thetas[-1]))
    speedup = (times["python"] / times["compiled"]
               if "compiled" in times else float("nan"))
    print(f"{name:28s} python {times['python']:8.3f}s   "
          f"compiled {times.get('compiled', float('nan')):8.3f}s   "
          f"speedup {speedup:6.1f}x   (checksum {checksum:+.6f})")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-final", type=float, default=20.0)
    args = parser.parse_args()

    if not COMPILED_AVAILABLE:
        print("compiled core not available; reporting the fallback only")
    config = IntegratorConfig(dt=1e-3, t_final=args.t_final, sample_every=1000)
    for n, all_to_all in ((16, True), (128, True), (1024, True),
                          (16, False), (64, False)):
        kind = "all-to-all" if all_to_all else "network"
        init, params = make_case(n, all_to_all)
        run_case(f"N={n:5d} {kind}", init, params, config)


if __name__ == "__main__":
    main()
