"""Deterministic numerical primitives for the correction toolkit.

Provides strict-domain wrappers around the standard-normal CDF and
quantile, maximum-likelihood univariate logistic regression with Wald
tests (scalar and batched), and hash-derived random streams that make
every simulation in this package a pure function of its seeds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, ndtr, ndtri

__all__ = [
    "BatchWaldFit",
    "DegenerateCovariateError",
    "DegenerateOutcomeError",
    "LogisticFit",
    "RandomStream",
    "derive_seed",
    "derive_stream",
    "fit_logistic_univariate",
    "logistic_wald_batch",
    "std_normal_cdf",
    "std_normal_quantile",
]

_STREAM_TAG = b"mtcorrect.stream.v1"


class DegenerateOutcomeError(ValueError):
    """Outcome vector holds a single class; the slope is unidentifiable."""


class DegenerateCovariateError(ValueError):
    """Covariate is constant; the slope is unidentifiable."""


def std_normal_cdf(x):
    """Standard-normal CDF, accurate to well under 1e-12 absolute error.

    Accepts a scalar or an ndarray; non-finite input raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("std_normal_cdf requires finite input")
    out = ndtr(arr)
    return float(out) if arr.ndim == 0 else out


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    Strictly increasing; values at or outside {0, 1} raise ``ValueError``.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    out = ndtri(arr)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class LogisticFit:
    """Maximum-likelihood fit of ``logit P(y=1) = intercept + coefficient*x``."""

    intercept: float
    coefficient: float
    std_error: float
    z_statistic: float
    p_value: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class BatchWaldFit:
    """Per-column results of :func:`logistic_wald_batch` (all aligned arrays)."""

    intercept: np.ndarray
    coefficient: np.ndarray
    std_error: np.ndarray
    z_statistic: np.ndarray
    p_value: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    degenerate: np.ndarray


def _newton_logistic(y, X, max_iterations, tolerance):
    """Newton-Raphson for independent two-parameter logistic fits.

    One problem per column of ``X``; all columns advance in lockstep but a
    column is frozen as soon as its own update falls below ``tolerance``,
    so results are identical to fitting each column alone.  Columns whose
    information matrix degenerates (complete separation drives the working
    weights to zero) are frozen and reported as non-converged.
    """
    n, m = X.shape
    b0 = np.zeros(m)
    b1 = np.zeros(m)
    X2 = X * X
    converged = np.zeros(m, dtype=bool)
    dead = np.zeros(m, dtype=bool)
    iterations = np.zeros(m, dtype=np.int64)

    for it in range(1, max_iterations + 1):
        active = ~(converged | dead)
        if not active.any():
            break
        eta = X * b1 + b0
        mu = expit(eta)
        w = mu * (1.0 - mu)
        resid = y[:, None] - mu
        s0 = w.sum(axis=0)
        s1 = (w * X).sum(axis=0)
        s2 = (w * X2).sum(axis=0)
        g0 = resid.sum(axis=0)
        g1 = (resid * X).sum(axis=0)
        det = s0 * s2 - s1 * s1
        bad = ~np.isfinite(det) | (det <= 0.0)
        safe_det = np.where(bad, 1.0, det)
        d0 = (s2 * g0 - s1 * g1) / safe_det
        d1 = (s0 * g1 - s1 * g0) / safe_det
        bad |= ~np.isfinite(d0) | ~np.isfinite(d1)
        step = active & ~bad
        b0 = np.where(step, b0 + d0, b0)
        b1 = np.where(step, b1 + d1, b1)
        iterations = np.where(step, it, iterations)
        converged |= step & (np.maximum(np.abs(d0), np.abs(d1)) < tolerance)
        dead |= active & bad

    # Observed information at the final parameters; slope variance is the
    # (2, 2) entry of its inverse.
    eta = X * b1 + b0
    mu = expit(eta)
    w = mu * (1.0 - mu)
    s0 = w.sum(axis=0)
    s1 = (w * X).sum(axis=0)
    s2 = (w * X2).sum(axis=0)
    det = s0 * s2 - s1 * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.where(det > 0.0, s0 / det, np.inf)
    se = np.sqrt(var)
    with np.errstate(invalid="ignore"):
        z = np.where(np.isfinite(se) & (se > 0.0), b1 / se, 0.0)
    p = 2.0 * ndtr(-np.abs(z))
    return b0, b1, se, z, p, converged, iterations


def fit_logistic_univariate(outcomes, covariate, max_iterations=50, tolerance=1e-8):
    """Fit a univariate logistic regression and its two-sided Wald test.

    Parameters
    ----------
    outcomes : array-like of 0/1, length >= 4, both classes present
    covariate : array-like of reals with nonzero variance
    max_iterations, tolerance : Newton-Raphson stopping rule; convergence
        means the largest absolute parameter update drops below
        ``tolerance``.

    Returns a :class:`LogisticFit`.  Non-convergence (e.g. complete
    separation) is reported via ``converged=False``; the Wald p-value is
    then unreliable and callers screening many tests should treat the fit
    as overwhelming evidence (p -> 0) rather than trust it.
    """
    y = np.asarray(outcomes, dtype=float).ravel()
    x = np.asarray(covariate, dtype=float).ravel()
    if y.shape != x.shape:
        raise ValueError("outcomes and covariate must have equal length")
    if y.size < 4:
        raise ValueError("need at least 4 observations")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("outcomes must be coded 0/1")
    if not np.all(np.isfinite(x)):
        raise ValueError("covariate must be finite")
    if y.min() == y.max():
        raise DegenerateOutcomeError("outcomes contain a single class")
    if x.min() == x.max():
        raise DegenerateCovariateError("covariate has zero variance")

    b0, b1, se, z, p, conv, iters = _newton_logistic(
        y, x[:, None], max_iterations, tolerance
    )
    return LogisticFit(
        intercept=float(b0[0]),
        coefficient=float(b1[0]),
        std_error=float(se[0]),
        z_statistic=float(z[0]),
        p_value=float(p[0]),
        converged=bool(conv[0]),
        iterations=int(iters[0]),
    )


def logistic_wald_batch(outcomes, matrix, max_iterations=50, tolerance=1e-8):
    """Univariate logistic Wald tests for every column of ``matrix``.

    Constant columns are skipped (flagged ``degenerate`` with p-value 1)
    instead of raising, so a single uninformative biomarker does not abort
    a screening run.  Everything else matches
    :func:`fit_logistic_univariate` column by column.
    """
    y = np.asarray(outcomes, dtype=float).ravel()
    X = np.ascontiguousarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("matrix must be n_observations x n_tests")
    if y.size < 4:
        raise ValueError("need at least 4 observations")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("outcomes must be coded 0/1")
    if y.min() == y.max():
        raise DegenerateOutcomeError("outcomes contain a single class")

    m = X.shape[1]
    degenerate = np.ptp(X, axis=0) == 0.0
    intercept = np.zeros(m)
    coefficient = np.zeros(m)
    std_error = np.full(m, np.inf)
    z_statistic = np.zeros(m)
    p_value = np.ones(m)
    converged = np.ones(m, dtype=bool)
    iterations = np.zeros(m, dtype=np.int64)

    good = ~degenerate
    if good.any():
        b0, b1, se, z, p, conv, iters = _newton_logistic(
            y, X[:, good], max_iterations, tolerance
        )
        intercept[good] = b0
        coefficient[good] = b1
        std_error[good] = se
        z_statistic[good] = z
        p_value[good] = p
        converged[good] = conv
        iterations[good] = iters

    return BatchWaldFit(
        intercept=intercept,
        coefficient=coefficient,
        std_error=std_error,
        z_statistic=z_statistic,
        p_value=p_value,
        converged=converged,
        iterations=iterations,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class RandomStream:
    """A labelled, independently seeded random source.

    Streams with identical ``(master_seed, labels)`` generate identical
    sequences; distinct labels give statistically independent streams.
    Derivation hashes the seed and label, so the order in which streams
    are created is irrelevant.
    """

    master_seed: int
    labels: tuple[tuple[str, int], ...]
    generator: np.random.Generator = field(repr=False, compare=False)


def _check_seed(master_seed):
    seed = int(master_seed)
    if not -(2**63) <= seed < 2**63:
        raise ValueError("master_seed must fit in a signed 64-bit integer")
    return seed


def derive_stream(master_seed, role, index=0):
    """Derive the stream for ``(role, index)`` under ``master_seed``.

    The generator is ``numpy`` PCG64 seeded from
    ``sha256(tag || seed || role || index)``, which is bit-stable across
    platforms and independent of any other stream ever derived.
    """
    seed = _check_seed(master_seed)
    idx = int(index)
    if idx < 0 or idx >= 2**63:
        raise ValueError("index must be a nonnegative 63-bit integer")
    digest = hashlib.sha256(
        _STREAM_TAG
        + seed.to_bytes(8, "big", signed=True)
        + role.encode("utf-8")
        + b"\x00"
        + idx.to_bytes(8, "big")
    ).digest()
    entropy = int.from_bytes(digest, "big")
    generator = np.random.default_rng(np.random.SeedSequence(entropy))
    return RandomStream(
        master_seed=seed, labels=((str(role), idx),), generator=generator
    )


def derive_seed(master_seed, label):
    """Fold a string label into a fresh 63-bit master seed (for sub-runs)."""
    seed = _check_seed(master_seed)
    digest = hashlib.sha256(
        _STREAM_TAG + b"/seed" + seed.to_bytes(8, "big", signed=True) + label.encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big") >> 1
