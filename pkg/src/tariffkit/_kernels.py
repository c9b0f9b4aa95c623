"""Numerical kernels with optional numba acceleration.

The hot inner loops of the toolkit live here: the bisection solve for the
market clearing price (called thousands of times by the calibration grid
search) and the VAR simulation recursion (called per Monte Carlo replication).
Each kernel has a pure-numpy implementation; when numba is importable and the
environment variable ``TARIFFKIT_NUMBA`` is not set to ``0``/``false``/``off``,
the same function is compiled with ``@njit``.  Both paths stay importable so
they can be benchmarked and cross-checked against each other (see
``benchmarks/bench_kernels.py``).

Kernels signal failure by returning NaN; callers translate that into a
``SolverError`` with the bracket that was searched.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

_flag = os.environ.get("TARIFFKIT_NUMBA", "1").strip().lower()
NUMBA_ENABLED = HAS_NUMBA and _flag not in ("0", "false", "off")

# Bracket for the relative price P/p0 searched by the bisection solver.
PRICE_BRACKET_LO = 0.01
PRICE_BRACKET_HI = 100.0
_REL_WIDTH = 1e-12
_MAX_BISECT = 200


def demand_total_py(x, q, eta, wedge, scale):
    """Total demand at relative price x across isoelastic segments.

    Segment i buys ``q[i] * scale[i] * (x * wedge[i]) ** -eta[i]``; the wedge
    carries any ad valorem tariff factor on that segment's effective price and
    scale carries multiplicative demand shifts.
    """
    total = 0.0
    for i in range(q.shape[0]):
        total += q[i] * scale[i] * (x * wedge[i]) ** (-eta[i])
    return total


def clearing_price_py(q, eta, wedge, scale, supply_q0, eta_s):
    """Relative price x = P/p0 clearing supply_q0 * x**eta_s against demand.

    A fixed (within-season) supply is the special case eta_s = 0.  Bisection
    runs until the bracket width falls below 1e-12 relative to the midpoint,
    then one Newton step polishes the root.  Returns NaN when the bracket
    does not contain a sign change.  The demand sum is inlined rather than
    calling demand_total so the jitted version stays cacheable.
    """
    lo = PRICE_BRACKET_LO
    hi = PRICE_BRACKET_HI
    f_lo = supply_q0 * lo**eta_s
    f_hi = supply_q0 * hi**eta_s
    for i in range(q.shape[0]):
        f_lo -= q[i] * scale[i] * (lo * wedge[i]) ** (-eta[i])
        f_hi -= q[i] * scale[i] * (hi * wedge[i]) ** (-eta[i])
    if f_lo > 0.0 or f_hi < 0.0:
        return np.nan
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _REL_WIDTH * mid:
            break
        f_mid = supply_q0 * mid**eta_s
        for i in range(q.shape[0]):
            f_mid -= q[i] * scale[i] * (mid * wedge[i]) ** (-eta[i])
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    # Newton polish: f'(x) = eta_s * S/x + sum eta_i * D_i / x, always > 0
    # away from the degenerate all-zero-elasticity case.
    f_x = supply_q0 * x**eta_s
    fprime = eta_s * supply_q0 * x ** (eta_s - 1.0)
    for i in range(q.shape[0]):
        f_x -= q[i] * scale[i] * (x * wedge[i]) ** (-eta[i])
        fprime += eta[i] * q[i] * scale[i] * wedge[i] ** (-eta[i]) * x ** (-eta[i] - 1.0)
    if fprime > 0.0:
        x = x - f_x / fprime
    return x


def simulate_var_py(coefs, intercept, b0, eps, y0):
    """Simulate y_t = c + sum_j A_j y_{t-j} + B0 eps_t over all rows of eps.

    coefs has shape (p, k, k), eps (n, k); the first p rows of the output are
    copied from y0 (p, k) and the recursion runs from row p onward, so
    callers include their own burn-in in eps (seeded from zeros) or restart
    from a stored presample.
    """
    n = eps.shape[0]
    k = eps.shape[1]
    p = coefs.shape[0]
    y = np.zeros((n, k))
    for t in range(p):
        for i in range(k):
            y[t, i] = y0[t, i]
    for t in range(p, n):
        for i in range(k):
            acc = intercept[i]
            for j in range(p):
                for m in range(k):
                    acc += coefs[j, i, m] * y[t - 1 - j, m]
            for m in range(k):
                acc += b0[i, m] * eps[t, m]
            y[t, i] = acc
    return y


if NUMBA_ENABLED:
    demand_total = njit(cache=True)(demand_total_py)
    clearing_price = njit(cache=True)(clearing_price_py)
    simulate_var = njit(cache=True)(simulate_var_py)
else:  # pragma: no cover - selected by environment flag
    demand_total = demand_total_py
    clearing_price = clearing_price_py
    simulate_var = simulate_var_py


def warmup():
    """Trigger jit compilation so timed sections exclude compile overhead."""
    q = np.array([1.0, 1.0])
    eta = np.array([0.5, 1.0])
    ones = np.ones(2)
    clearing_price(q, eta, ones, ones, 2.0, 1.0)
    simulate_var(
        np.zeros((1, 2, 2)), np.zeros(2), np.eye(2), np.zeros((4, 2)), np.zeros((1, 2))
    )
