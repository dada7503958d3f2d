#!/usr/bin/env python3
"""Time the compiled kernels against the pure-NumPy fallbacks.

Covers the three hot paths: the Cox partial-likelihood sweep (called once
per Metropolis step), weighted PAVA, and a full current-status profile
solve. Run after building the extension:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from kstepmle import _pykernels
from kstepmle.coxcs import IcmConfig, _CsProblem, _solve_icm
from kstepmle.data import TrueModel, generate_current_status, generate_right_censored
from kstepmle.coxrc import build_risk_sets

try:
    from kstepmle import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def bench_rc_logpl(backend, n=500):
    model = TrueModel(theta0=1.0, censor_upper=4.2)
    index = build_risk_sets(generate_right_censored(model, n, 0))
    w = index.z_sorted @ np.array([1.0])
    return timeit(lambda: backend.rc_logpl(w, index.event_pos, index.risk_start),
                  2000)


def bench_pava(backend, m=1000):
    rng = np.random.default_rng(1)
    y = rng.normal(size=m)
    wt = rng.random(m) + 0.1
    return timeit(lambda: backend.pava(y, wt), 500)


def bench_cs_solve(backend, n=200):
    import kstepmle.coxcs as coxcs

    model = TrueModel(theta0=1.0, censor_upper=4.2)
    problem = _CsProblem(generate_current_status(model, n, 0))
    c = problem.multipliers(np.array([1.0]))
    saved = coxcs.kernels
    coxcs.kernels = backend

    def solve():
        _solve_icm(problem, c, IcmConfig(), None)

    try:
        return timeit(solve, 20)
    finally:
        coxcs.kernels = saved


def main():
    rows = [
        ("cox partial loglik (n=500)", bench_rc_logpl),
        ("weighted pava (m=1000)", bench_pava),
        ("cs profile solve (n=200)", bench_cs_solve),
    ]
    print(f"{'kernel':<30} {'pure (us)':>12} {'compiled (us)':>14} {'speedup':>9}")
    for label, bench in rows:
        pure = bench(_pykernels) * 1e6
        if _speedups is None:
            print(f"{label:<30} {pure:>12.1f} {'unavailable':>14} {'-':>9}")
            continue
        fast = bench(_speedups) * 1e6
        print(f"{label:<30} {pure:>12.1f} {fast:>14.1f} {pure / fast:>8.1f}x")


if __name__ == "__main__":
    main()
