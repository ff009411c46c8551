#!/usr/bin/env python3
"""Time the jitted integrator loops against the pure-numpy fallback.

    python3 benchmarks/bench_numba.py [--repeat 5]

The first jitted call includes compilation (or a cache load) and is reported
separately.
"""
import argparse
import time

import numpy as np

from qssa_cm import _accel
from qssa_cm.kinetics import NondimHTA, ParameterSet
from qssa_cm.models import full_mm_problem, hta_problem
from qssa_cm.solver import EXPLICIT, IMPLICIT, SolverConfig, integrate

CASES = {
    "full MM, fig3 left, explicit": (full_mm_problem(ParameterSet.of(1, 3, 1, 1, 1), 60.0),
                                     SolverConfig(method=EXPLICIT, rtol=1e-10, atol=1e-12)),
    "full MM, fig1, explicit": (full_mm_problem(ParameterSet.of(1, 1, 4, 89, 100), 10.0),
                                SolverConfig(method=EXPLICIT, rtol=1e-10, atol=1e-12)),
    "HTA eps=1e-4, implicit": (hta_problem(NondimHTA(2.0, 1.0, 1e-4), 10.0),
                               SolverConfig(method=IMPLICIT, rtol=1e-8, atol=1e-10)),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"numba enabled: {_accel.NUMBA_ENABLED}")
    for name, (prob, cfg) in CASES.items():
        t0 = time.perf_counter()
        integrate(prob, cfg, accelerate=True)
        first = time.perf_counter() - t0
        fast, a = best_of(lambda: integrate(prob, cfg, accelerate=True), args.repeat)
        slow, b = best_of(lambda: integrate(prob, cfg, accelerate=False), args.repeat)
        same = np.allclose(a.states, b.states, rtol=1e-11, atol=1e-14)
        print(f"{name:32s} steps {a.stats.accepted:6d}  first {first:7.3f}s  "
              f"jit {fast:7.4f}s  pure {slow:7.4f}s  speedup {slow / fast:6.1f}x  match {same}")


if __name__ == "__main__":
    main()
