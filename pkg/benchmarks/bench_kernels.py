"""Timing comparison of the compiled kernels against the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The kernels compile with numba when it is importable and TARIFFKIT_NUMBA
is not set to "0"; the fallback is plain numpy.  Both paths are exercised
here by calling the *_py implementations directly next to the dispatched
versions, so one process measures both without reimporting.
"""

import time

import numpy as np

from tariffkit import _kernels
from tariffkit.datagen import VarSpec, generate_var_series
from tariffkit.market import ElasticityParams, MarketBaseline, TariffScenario, solve_equilibrium


def timeit(fn, *args, repeat=200):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_clearing_price():
    baseline = MarketBaseline(p0=9.30, q_us=2100.0, q_china=1300.0, q_row=1000.0)
    q = np.array([baseline.q_us, baseline.q_china, baseline.q_row])
    eta = np.array([1.3, 1.5, 2.0])
    wedge = np.array([1.0, 1.25, 1.0])
    scale = np.ones(3)
    args = (q, eta, wedge, scale, baseline.supply, 0.45)
    compiled = timeit(_kernels.clearing_price, *args)
    fallback = timeit(_kernels.clearing_price_py, *args)
    return "clearing_price", compiled, fallback


def bench_simulate_var():
    rng = np.random.default_rng(7)
    coefs = np.array([[[0.5, 0.1, 0.0], [0.0, 0.4, 0.1], [0.1, 0.0, 0.3]]])
    b0 = np.eye(3)
    eps = rng.standard_normal((5000, 3))
    y0 = np.zeros((1, 3))
    args = (coefs, np.zeros(3), b0, eps, y0)
    compiled = timeit(_kernels.simulate_var, *args, repeat=50)
    fallback = timeit(_kernels.simulate_var_py, *args, repeat=50)
    return "simulate_var (T=5000, k=3)", compiled, fallback


def bench_end_to_end():
    baseline = MarketBaseline(p0=9.30, q_us=2100.0, q_china=1300.0, q_row=1000.0)
    elas = ElasticityParams(eta_d_us=1.3, eta_d_china=1.5, eta_d_row=2.0, eta_s=0.45)
    scenario = TariffScenario(tau=0.25)

    def solve():
        solve_equilibrium(baseline, elas, scenario)

    spec = VarSpec(
        a_matrices=(((0.5, 0.1), (0.0, 0.4)),),
        b0=((1.0, 0.0), (0.3, 0.9)),
        names=("a", "b"),
        t_obs=2000,
    )

    def simulate():
        generate_var_series(spec)

    return [
        ("solve_equilibrium (dispatched)", timeit(solve)),
        ("generate_var_series (dispatched)", timeit(simulate, repeat=50)),
    ]


def main():
    _kernels.warmup()
    print(f"numba available: {_kernels.HAS_NUMBA}; compiled path active: {_kernels.NUMBA_ENABLED}")
    print()
    print(f"{'kernel':38s} {'compiled':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, compiled, fallback in (bench_clearing_price(), bench_simulate_var()):
        ratio = fallback / compiled if compiled > 0 else float("inf")
        print(f"{name:38s} {compiled * 1e6:10.1f}us {fallback * 1e6:10.1f}us {ratio:8.1f}x")
    print()
    for name, best in bench_end_to_end():
        print(f"{name:38s} {best * 1e6:10.1f}us")


if __name__ == "__main__":
    main()
