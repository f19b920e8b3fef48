"""Time the hot kernels with numba on and off.

Each configuration runs in a fresh interpreter so that ``APPROACHLAB_NUMBA``
takes effect at import.  Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from approachlab import _jit
from approachlab.calibration import full_mask, make_regular_grid
from approachlab.geometry import HalfspaceIntersection
from approachlab.invariant import invariant_measure_kernel
from approachlab.kernels import (calib_episode_kernel, checkpoint_array, regret_episode_kernel,
                                 selfplay2_kernel)
from approachlab.regret import SwapFamily
from approachlab.zerosum import simplex_game_kernel

repeat, scale = int(sys.argv[1]), float(sys.argv[2])
rng = np.random.default_rng(0)


def regret_episode():
    rho = rng.random((5, 5))
    u = rng.random((int(4000 * scale), 2))
    regret_episode_kernel(rho, 2, 1, np.full(5, 0.2), SwapFamily.internal(5).maps, u,
                          checkpoint_array([u.shape[0]]))


def calibration_episode():
    g = make_regular_grid(1, 0.05)
    u = rng.random((int(2000 * scale), 2))
    calib_episode_kernel(g.points, g.nu, full_mask(len(g)), 2, 1, np.array([0.5, 0.5]), u,
                         checkpoint_array([u.shape[0]]))


def zero_sum_solves():
    for _ in range(int(2000 * scale)):
        simplex_game_kernel(rng.normal(size=(4, 4)))


def invariant_measures():
    for _ in range(int(2000 * scale)):
        invariant_measure_kernel(rng.random((6, 6)), 1e-11, 10**6)


def polytope_projection():
    A = rng.normal(size=(6, 3))
    w = rng.normal(size=3)
    P = HalfspaceIntersection(A, A @ w + rng.random(6), w)
    P.project_many(rng.normal(scale=3.0, size=(int(2000 * scale), 3)))


def selfplay():
    u = rng.random((int(20000 * scale), 2))
    selfplay2_kernel(rng.random((3, 3)), rng.random((3, 3)), 0, 0, u,
                     checkpoint_array([u.shape[0]]))


out = {"numba": _jit.ENABLED, "timings": {}}
for fn in (regret_episode, calibration_episode, zero_sum_solves, invariant_measures,
           polytope_projection, selfplay):
    fn()  # warm up (and compile)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out["timings"][fn.__name__] = best
print(json.dumps(out))
"""


def run(flag: str, repeat: int, scale: float) -> dict:
    env = dict(os.environ, APPROACHLAB_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat), str(scale)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--scale", type=float, default=1.0, help="multiplies every problem size")
    p.add_argument("--json", action="store_true", help="print raw JSON")
    args = p.parse_args(argv)
    on = run("1", args.repeat, args.scale)
    off = run("0", args.repeat, args.scale)
    if args.json:
        print(json.dumps({"numba": on, "numpy": off}, indent=2))
        return 0
    print(f"{'kernel':22s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, t_on in on["timings"].items():
        t_off = off["timings"][name]
        print(f"{name:22s} {t_on:10.4f} {t_off:10.4f} {t_off / t_on:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
