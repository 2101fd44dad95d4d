"""Compare the compiled and pure-numpy integration kernels.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``EPIDYN_DISABLE_NUMBA``. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--years 10]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from epidyn import BACKEND
from epidyn.control import ControlProblem, cost_gradient
from epidyn.model import make_params
from epidyn.simulate import IntegrationOptions, integrate

years, repeat = float(sys.argv[1]), int(sys.argv[2])
p = make_params("sverirs", dict(alpha=0.1, beta=0.9, gamma=1/7, delta=1/14, sigma=1/7,
                                omega=1/90, n=100.0, phi=1/360, psi=1/180, rho=0.1))
opts = IntegrationOptions(t_end=365.0 * years, rel_tol=1e-8, abs_tol=1e-10)
prob = ControlProblem(p.replace(phi=0.0), [30, 5, 5, 10, 50], 365.0 * years, intervals=24)
u = np.full(24, 1 / 720)

t = time.perf_counter()
integrate("sverirs", p, [20, 3, 3, 66, 8], opts)
cost_gradient(prob, u)
warm = time.perf_counter() - t  # includes compilation on the numba path

def best(fn):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

out = {
    "backend": BACKEND,
    "first_call": warm,
    "integrate": best(lambda: integrate("sverirs", p, [20, 3, 3, 66, 8], opts)),
    "gradient": best(lambda: cost_gradient(prob, u)),
}
json.dump(out, sys.stdout)
"""


def run(disable: bool, years: float, repeat: int) -> dict:
    env = dict(os.environ, EPIDYN_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(years), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--years", type=float, default=10.0)
    args = ap.parse_args()
    rows = [run(False, args.years, args.repeat), run(True, args.years, args.repeat)]
    print(f"{'backend':<8} {'first call':>11} {'integrate':>11} {'gradient':>11}")
    for r in rows:
        print(f"{r['backend']:<8} {r['first_call']:>10.3f}s {r['integrate']:>10.4f}s {r['gradient']:>10.4f}s")
    if rows[0]["backend"] == "numba":
        print(f"speedup  {'':>11} {rows[1]['integrate'] / rows[0]['integrate']:>10.1f}x "
              f"{rows[1]['gradient'] / rows[0]['gradient']:>10.1f}x")


if __name__ == "__main__":
    main()
