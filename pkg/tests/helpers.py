"""Independent oracles shared across test modules.

These deliberately avoid the code paths they are used to check: the
normal CDF comes from arbitrary-precision erfc, and the logistic MLE
comes from a zoomed grid search over the log-likelihood rather than any
Newton-style solver.
"""

import mpmath
import numpy as np

mpmath.mp.dps = 30


def normal_cdf_oracle(x):
    """High-precision standard-normal CDF via mpmath erfc."""
    return float(0.5 * mpmath.erfc(-mpmath.mpf(float(x)) / mpmath.sqrt(2)))


def normal_quantile_oracle(p, tol=1e-18):
    """Invert the high-precision CDF by bisection on [-40, 40]."""
    lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
    target = mpmath.mpf(float(p))
    for _ in range(200):
        mid = (lo + hi) / 2
        if 0.5 * mpmath.erfc(-mid / mpmath.sqrt(2)) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return float((lo + hi) / 2)


def logistic_loglik(y, x, intercept, slope):
    """Log-likelihood of the two-parameter logistic model, evaluated stably."""
    eta = intercept + slope * x
    # log(1 + exp(eta)) without overflow
    log1pexp = np.logaddexp(0.0, eta)
    return float(np.sum(y * eta - log1pexp))


def grid_search_mle(y, x, lo=-5.0, hi=5.0, points=21, rounds=7):
    """Brute-force logistic MLE: zoomed grid search over (intercept, slope).

    Each round evaluates a points x points grid and shrinks the box around
    the best cell; seven rounds over [-5, 5]^2 resolve the optimum to well
    under 1e-4 in each coordinate.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    b0_lo, b0_hi = lo, hi
    b1_lo, b1_hi = lo, hi
    best = (0.0, 0.0)
    for _ in range(rounds):
        b0s = np.linspace(b0_lo, b0_hi, points)
        b1s = np.linspace(b1_lo, b1_hi, points)
        ll = np.empty((points, points))
        for i, b0 in enumerate(b0s):
            eta = b0 + np.outer(b1s, x)
            ll[i] = (y * eta - np.logaddexp(0.0, eta)).sum(axis=1)
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        best = (float(b0s[i]), float(b1s[j]))
        span0 = (b0_hi - b0_lo) / (points - 1)
        span1 = (b1_hi - b1_lo) / (points - 1)
        b0_lo, b0_hi = best[0] - span0, best[0] + span0
        b1_lo, b1_hi = best[1] - span1, best[1] + span1
    return best


def random_clean_dataset(seed, max_n=30):
    """A small random 0/1-outcome dataset that avoids separation.

    Weak effects plus overlapping covariates keep the MLE interior; the
    caller should still verify convergence and retry with another seed if
    a rare separated draw slips through.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(12, max_n + 1))
    y = (rng.random(n) < 0.5).astype(float)
    if y.min() == y.max():
        y[0] = 1.0 - y[0]
    x = rng.standard_normal(n) + 0.4 * y
    return y, x
