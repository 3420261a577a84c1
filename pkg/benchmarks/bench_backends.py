"""Compare the compiled RK4 kernel with the pure-Python fallback.

    python benchmarks/bench_backends.py [--T 5] [--repeat 3]

Reports wall time per integrated step for every model on the example1
signal and on good RPS, plus the largest state difference between backends.
"""

import argparse
import time

import numpy as np

from gamedyn.dynamics import ALL_MODELS
from gamedyn.integrator import BACKENDS, IntegratorConfig, integrate
from gamedyn.payoffs import example1_signal, good_rps


def timed(kind, src, x0, cfg, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = integrate(kind, None, x0, src, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "compiled" not in BACKENDS:
        raise SystemExit("compiled kernel not built; run `pip install -e .` first")
    cfg = IntegratorConfig(dt=1e-3, T=args.T, record_every=10)
    cases = [("example1", example1_signal(), np.array([0.5, 0.5])),
             ("good-rps", good_rps(), np.array([0.5, 0.3, 0.2]))]
    print(f"{'model':<11} {'source':<9} {'python us/step':>15} {'compiled us/step':>17} {'speedup':>8} {'max |diff|':>11}")
    for kind in ALL_MODELS:
        for name, src, x0 in cases:
            tp, a = timed(kind, src, x0, cfg, "python", 1)
            tc, b = timed(kind, src, x0, cfg, "compiled", args.repeat)
            diff = np.abs(a.states - b.states).max()
            per = 1e6 / cfg.nsteps
            print(f"{kind.value:<11} {name:<9} {tp * per:15.2f} {tc * per:17.3f} {tp / tc:8.0f} {diff:11.1e}")


if __name__ == "__main__":
    main()
