"""Numba vs numpy timings for the simulator kernels, plus an end-to-end run.

    python3 benchmarks/bench_kernels.py [--trials N]

The end-to-end numpy figure comes from a subprocess with
HETNET_EE_DISABLE_NUMBA=1, since the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hetnet_ee import _kernels

E2E_SNIPPET = """
import time
from hetnet_ee import default_params, _kernels
from hetnet_ee.montecarlo import SimulationSettings, simulate
p = default_params()
s = SimulationSettings(trials={trials}, window_half_width=10000.0)
simulate(p, SimulationSettings(trials=20, window_half_width=10000.0), mode="{mode}")  # warm-up
t = time.perf_counter()
simulate(p, s, mode="{mode}")
print(_kernels.backend(), (time.perf_counter() - t) / {trials} * 1e3)
"""


def best_of(fn, repeat=7, number=20):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        for _ in range(number):
            fn()
        times.append((time.perf_counter() - t) / number)
    return min(times)


def kernel_table(rng):
    n_bs = 400     # tier-1 BSs in a 20 km x 20 km window at 1 per km^2
    n_users = 300  # users inside a loaded small-cell disk
    bx, by = rng.uniform(-1e4, 1e4, (2, n_bs))
    qx, qy = rng.uniform(-1e3, 1e3, (2, n_users))
    h = rng.exponential(size=n_bs)
    ring = rng.uniform(-400, 400, (2, 30))

    cases = [
        ("nearest", lambda f: f(qx, qy, bx, by)),
        ("path_gain_sum", lambda f: f(bx, by, h, 4.0, 3)),
        ("circle_covered", lambda f: f(ring[0], ring[1], 250.0)),
    ]
    print(f"{'kernel':16s} {'numpy [us]':>12s} {'numba [us]':>12s} {'speed-up':>9s}")
    for name, call in cases:
        f_np = getattr(_kernels, f"{name}_numpy")
        f_nb = getattr(_kernels, f"{name}_numba")
        t_np = best_of(lambda: call(f_np))
        if f_nb is None:
            print(f"{name:16s} {t_np * 1e6:12.1f} {'n/a':>12s}")
            continue
        call(f_nb)  # compile
        t_nb = best_of(lambda: call(f_nb))
        print(f"{name:16s} {t_np * 1e6:12.1f} {t_nb * 1e6:12.1f} {t_np / t_nb:9.1f}")


def end_to_end(trials):
    print(f"\nend-to-end per-trial time ({trials} trials)")
    print(f"{'mode':6s} {'backend':8s} {'ms/trial':>9s}")
    for mode in ("assoc", "sinr", "full"):
        for disable in ("0", "1"):
            env = dict(os.environ, HETNET_EE_DISABLE_NUMBA=disable)
            out = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(trials=trials, mode=mode)],
                                 env=env, capture_output=True, text=True, check=True)
            backend, ms = out.stdout.split()
            print(f"{mode:6s} {backend:8s} {float(ms):9.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; only numpy timings are shown")
    kernel_table(np.random.default_rng(1))
    if not args.skip_e2e:
        end_to_end(args.trials)


if __name__ == "__main__":
    main()
