#!/usr/bin/env python3
"""
Benchmark: compiled vs interpreted RK4 kernel.

Two comparisons:

* in-process, the njit ``rk4_span`` against its ``.py_func`` on one long span;
* end to end, one preset run in a child process with and without
  ``MAGLEV_SMC_DISABLE_NUMBA=1``.

Usage:
    python3 benchmarks/bench_kernels.py [--steps N] [--repeat N] [--preset NAME]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from maglev_smc import NUMBA_ENABLED, PlantParams
from maglev_smc import _kernels as K
from maglev_smc.plant import DisturbanceSpec, equilibrium

CHILD = """
import json, sys, time
from maglev_smc import NUMBA_ENABLED
from maglev_smc.harness import preset, run
sc = preset(sys.argv[1])
run(sc.replace(t_end=0.01))  # warm-up / compile
t0 = time.perf_counter()
rec = run(sc)
print(json.dumps({"numba": NUMBA_ENABLED, "wall": time.perf_counter() - t0,
                  "iae": rec.metrics.iae, "status": rec.status}))
"""


def _span_args(steps: int):
    prm = PlantParams()
    x = equilibrium(prm).as_array().astype(float)
    x[0] += 1e-4
    dargs = DisturbanceSpec.sinusoid((0.0, 0.0, 0.1), frame="z").kernel_args()
    return (x, 0.0, 1e-4, steps, K.DRIVE_LINEARIZED, 0.0, prm.as_array(), prm.as_array(), 1e-4,
            *dargs, np.empty((steps, 3)), np.empty(steps))


def time_kernel(fn, steps: int, repeat: int) -> tuple[float, np.ndarray]:
    best, x_end = np.inf, None
    for _ in range(repeat):
        args = _span_args(steps)
        t0 = time.perf_counter()
        status, done = fn(*args)
        best = min(best, time.perf_counter() - t0)
        if status != K.STATUS_OK or done != steps:
            raise RuntimeError(f"span stopped early (status {status} after {done} steps)")
        x_end = args[0]
    return best, x_end


def time_preset(name: str, disable: bool) -> dict:
    env = dict(os.environ)
    if disable:
        env["MAGLEV_SMC_DISABLE_NUMBA"] = "1"
    else:
        env.pop("MAGLEV_SMC_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", CHILD, name], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--preset", default="fig3-regulation")
    args = ap.parse_args(argv)

    print(f"numba available in this process: {NUMBA_ENABLED}")
    if NUMBA_ENABLED:
        K.rk4_span(*_span_args(10))  # compile
        t_jit, x_jit = time_kernel(K.rk4_span, args.steps, args.repeat)
        t_py, x_py = time_kernel(K.rk4_span.py_func, args.steps, max(1, args.repeat // 3))
        print(f"rk4_span, {args.steps} steps")
        print(f"  njit     {t_jit * 1e3:9.2f} ms")
        print(f"  py_func  {t_py * 1e3:9.2f} ms   speed-up x{t_py / t_jit:.1f}")
        print(f"  final-state difference {np.max(np.abs(x_jit - x_py)):.3e}")

    fast = time_preset(args.preset, disable=False)
    slow = time_preset(args.preset, disable=True)
    print(f"preset {args.preset}, end to end")
    print(f"  numba on   {fast['wall']:8.3f} s  (IAE {fast['iae']:.6g})")
    print(f"  numba off  {slow['wall']:8.3f} s  (IAE {slow['iae']:.6g})   speed-up x{slow['wall'] / fast['wall']:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
