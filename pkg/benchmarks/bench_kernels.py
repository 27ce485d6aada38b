#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-numpy fallback.

Times the MMSE quadratic-form kernel (the hot spot of best-response sweeps)
at several system sizes, then a full equilibrium run through each backend,
and checks that the two backends agree numerically.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from powergame.kernels import _pure
from powergame.receivers import generate_codes

try:
    from powergame.kernels import _native
except ImportError:
    _native = None


def setup(k_users, n_chips, seed=0):
    rng = np.random.default_rng(seed)
    codes = generate_codes(k_users, n_chips, seed).codes
    weights = rng.uniform(0.0, 10.0, size=(k_users, k_users))
    weights[np.arange(k_users), np.arange(k_users)] = 0.0
    return codes, weights


def time_call(fn, *args, repeat=50):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_quadforms():
    print(f"{'K':>4} {'N':>4} {'pure':>12} {'native':>12} {'speedup':>8}")
    for k_users, n_chips in [(8, 32), (16, 32), (32, 32), (48, 32), (64, 64)]:
        codes, weights = setup(k_users, n_chips)
        sigma2 = 1.0
        t_pure = time_call(_pure.mmse_quadforms, codes, weights, sigma2)
        if _native is None:
            print(f"{k_users:>4} {n_chips:>4} {t_pure*1e6:>10.1f}us "
                  f"{'n/a':>12} {'n/a':>8}")
            continue
        t_nat = time_call(_native.mmse_quadforms, codes, weights, sigma2)
        a = _pure.mmse_quadforms(codes, weights, sigma2)
        b = _native.mmse_quadforms(codes, weights, sigma2)
        assert np.allclose(a, b, rtol=1e-10), "backends disagree"
        print(f"{k_users:>4} {n_chips:>4} {t_pure*1e6:>10.1f}us "
              f"{t_nat*1e6:>10.1f}us {t_pure/t_nat:>7.1f}x")


def bench_dynamics():
    import powergame.kernels as kernels
    from powergame.dynamics import run_best_response_dynamics
    from powergame.experiments import build_instance
    from powergame.receivers import ReceiverKind
    from powergame.scenario import GameConfig

    scenario, codes = build_instance(32, 32, 1)
    config = GameConfig(K=32, N=32, q=0.01)

    results = {}
    backends = {"pure": _pure} if _native is None else \
        {"pure": _pure, "native": _native}
    for name, impl in backends.items():
        kernels.mmse_quadforms = impl.mmse_quadforms
        kernels.mmse_quadform_single = impl.mmse_quadform_single
        t0 = time.perf_counter()
        report = run_best_response_dynamics(scenario, codes, config,
                                            receiver=ReceiverKind.MMSE)
        results[name] = (time.perf_counter() - t0, report)
        print(f"dynamics K=32 [{name}]: {results[name][0]*1e3:.1f} ms, "
              f"{report.iterations} iterations")
    if len(results) == 2:
        pa = results["pure"][1].trajectory[-1].p
        pb = results["native"][1].trajectory[-1].p
        print(f"equilibrium power agreement: "
              f"max rel diff {np.max(np.abs(pa - pb) / pb):.2e}")


if __name__ == "__main__":
    if _native is None:
        print("compiled kernel not available; timing the fallback only")
    bench_quadforms()
    bench_dynamics()
