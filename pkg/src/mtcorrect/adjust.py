"""Multiple-testing correction procedures.

Four procedures over a batch of raw p-values: the classical Bonferroni,
Holm (step-down) and Benjamini-Hochberg (step-up) corrections, and the
beta-exponential adjustment (BEA), which rescales the number of tests by
the observed fraction of raw-significant findings raised to an exponent
driven by a type-II-error parameter.  Every procedure returns per-test
rejection decisions plus the effective per-test significance level it
implicitly applied.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "METHOD_ORDER",
    "CAP_POLICIES",
    "AdjustmentOutcome",
    "BeaDiagnostics",
    "PValueBatch",
    "apply_method",
    "bea",
    "bea_effective_count",
    "bh",
    "bonferroni",
    "holm",
]

METHOD_ORDER = ("bonferroni", "holm", "bh", "bea")
CAP_POLICIES = ("cap-at-alpha", "uncapped")


@dataclass(frozen=True)
class PValueBatch:
    """An indexed batch of raw p-values.

    ``p_values`` are floats in [0, 1]; ``test_ids`` are unique stable
    identifiers aligned with them.
    """

    p_values: np.ndarray
    test_ids: tuple[str, ...]

    def __post_init__(self):
        p = np.asarray(self.p_values, dtype=float)
        object.__setattr__(self, "p_values", p)
        object.__setattr__(self, "test_ids", tuple(str(t) for t in self.test_ids))
        if p.ndim != 1 or p.size < 1:
            raise ValueError("p_values must be a nonempty 1-D array")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            raise ValueError("p-values must lie in [0, 1]")
        if len(self.test_ids) != p.size:
            raise ValueError("test_ids must align with p_values")
        if len(set(self.test_ids)) != len(self.test_ids):
            raise ValueError("test_ids must be unique")

    @classmethod
    def from_values(cls, values, test_ids=None):
        values = np.asarray(values, dtype=float)
        if test_ids is None:
            test_ids = tuple(f"t{i + 1}" for i in range(values.size))
        return cls(p_values=values, test_ids=tuple(test_ids))

    def __len__(self):
        return int(self.p_values.size)


@dataclass(frozen=True)
class BeaDiagnostics:
    """Quantities behind one beta-exponential adjustment.

    ``effective_tests`` is the rescaled test count
    ``total_tests * significant_fraction ** exponent`` with
    ``exponent = 1 / (1 - beta)``; ``proportional_tests`` is the plain
    rescaling ``total_tests * significant_fraction`` (the ``beta = 0``
    case, which equals ``significant_count``).  Threshold fields are
    filled in once a decision rule has been applied.
    """

    total_tests: int
    significant_count: int
    significant_fraction: float
    proportional_tests: float
    beta: float
    exponent: float
    effective_tests: float
    threshold_uncapped: float | None = None
    threshold_applied: float | None = None
    cap_engaged: bool | None = None


@dataclass(frozen=True)
class AdjustmentOutcome:
    """Decisions of one correction procedure on one batch.

    ``adjusted_p`` is defined for bonferroni/holm/bh and ``None`` for
    bea, which is a pure threshold rule.  ``effective_alpha`` is the
    per-test level the procedure implicitly applied (for step procedures,
    the conventional single-number summary used by the power pipeline).
    """

    method: str
    rejected: np.ndarray
    adjusted_p: np.ndarray | None
    effective_alpha: float
    diagnostics: BeaDiagnostics | None = None

    @property
    def n_rejected(self):
        return int(self.rejected.sum())


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    return alpha


def _check_beta(beta):
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    return beta


def bonferroni(batch, alpha=0.05):
    """Reject tests with p < alpha/m; adjusted p-values are min(1, m*p)."""
    alpha = _check_alpha(alpha)
    p = batch.p_values
    m = p.size
    effective = alpha / m
    return AdjustmentOutcome(
        method="bonferroni",
        rejected=p < effective,
        adjusted_p=np.minimum(p * m, 1.0),
        effective_alpha=effective,
    )


def holm(batch, alpha=0.05):
    """Step-down correction.

    Scanning p-values in ascending order, rank k is tested at
    alpha/(m-k+1); the first rank at or above its level stops the scan
    and everything before it is rejected.  Adjusted p-values are the
    running maximum of (m-k+1)*p, clamped to 1.
    """
    alpha = _check_alpha(alpha)
    p = batch.p_values
    m = p.size
    order = np.argsort(p, kind="stable")
    ps = p[order]
    denom = m - np.arange(m)  # m-k+1 for 1-based rank k
    levels = alpha / denom
    blocked = np.nonzero(ps >= levels)[0]
    n_rejected = int(blocked[0]) if blocked.size else m

    rejected_sorted = np.arange(m) < n_rejected
    adjusted_sorted = np.minimum(np.maximum.accumulate(ps * denom), 1.0)
    rejected = np.empty(m, dtype=bool)
    adjusted = np.empty(m, dtype=float)
    rejected[order] = rejected_sorted
    adjusted[order] = adjusted_sorted

    if n_rejected > 0:
        effective = alpha / (m - n_rejected + 1)
    else:
        effective = alpha / m
    return AdjustmentOutcome(
        method="holm", rejected=rejected, adjusted_p=adjusted, effective_alpha=effective
    )


def bh(batch, alpha=0.05):
    """Benjamini-Hochberg step-up correction (false-discovery-rate control).

    Rejects ranks 1..K where K is the largest k with p_(k) <= k*alpha/m.
    Adjusted p-values take the running minimum of min(1, p*m/k) from the
    largest rank downward.
    """
    alpha = _check_alpha(alpha)
    p = batch.p_values
    m = p.size
    order = np.argsort(p, kind="stable")
    ps = p[order]
    ranks = np.arange(1, m + 1)
    passing = np.nonzero(ps <= ranks * alpha / m)[0]
    n_rejected = int(passing[-1]) + 1 if passing.size else 0

    rejected_sorted = np.arange(m) < n_rejected
    scaled = np.minimum(ps * m / ranks, 1.0)
    adjusted_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    rejected = np.empty(m, dtype=bool)
    adjusted = np.empty(m, dtype=float)
    rejected[order] = rejected_sorted
    adjusted[order] = adjusted_sorted

    if n_rejected > 0:
        effective = n_rejected * alpha / m
    else:
        effective = alpha / m
    return AdjustmentOutcome(
        method="bh", rejected=rejected, adjusted_p=adjusted, effective_alpha=effective
    )


def bea_effective_count(total_tests, significant_count, beta=0.8):
    """Rescaled test count for the beta-exponential adjustment.

    With fraction ``b = significant_count / total_tests`` of raw-level
    findings, the effective count is ``total_tests * b ** (1/(1-beta))``.
    It equals ``total_tests`` when every test is raw-significant, is
    exactly 0 when none is, and tends to ``significant_count`` as beta
    approaches 0.
    """
    m0 = int(total_tests)
    n = int(significant_count)
    beta = _check_beta(beta)
    if m0 < 1:
        raise ValueError("total_tests must be at least 1")
    if not 0 <= n <= m0:
        raise ValueError("significant_count must lie in [0, total_tests]")
    fraction = n / m0
    exponent = 1.0 / (1.0 - beta)
    effective = 0.0 if n == 0 else m0 * fraction**exponent
    return BeaDiagnostics(
        total_tests=m0,
        significant_count=n,
        significant_fraction=fraction,
        proportional_tests=m0 * fraction,
        beta=beta,
        exponent=exponent,
        effective_tests=effective,
    )


def bea(batch, alpha=0.05, beta=0.8, cap_policy="cap-at-alpha"):
    """Beta-exponential adjustment applied as a Bonferroni-style threshold.

    Counts ``n`` raw p-values strictly below ``alpha``, rescales the test
    count to ``m2`` (see :func:`bea_effective_count`) and rejects tests
    with p below ``alpha / m2``.  When ``m2 < 1`` that threshold exceeds
    ``alpha``; under the default ``cap-at-alpha`` policy it is capped at
    ``alpha`` so the rule is never more liberal than no adjustment, while
    ``uncapped`` only caps at 1.  With no raw-significant test the rule is
    vacuous: nothing is rejected and the threshold reported is ``alpha``.
    """
    alpha = _check_alpha(alpha)
    if cap_policy not in CAP_POLICIES:
        raise ValueError(f"cap_policy must be one of {CAP_POLICIES}")
    p = batch.p_values
    m = p.size
    n = int((p < alpha).sum())
    diag = bea_effective_count(m, n, beta)

    if n == 0:
        uncapped = np.inf
        applied = alpha
    else:
        uncapped = alpha / diag.effective_tests
        if cap_policy == "cap-at-alpha":
            applied = min(alpha, uncapped)
        else:
            applied = min(1.0, uncapped)
    diag = dataclasses.replace(
        diag,
        threshold_uncapped=uncapped,
        threshold_applied=applied,
        cap_engaged=applied < uncapped,
    )
    return AdjustmentOutcome(
        method="bea",
        rejected=p < applied,
        adjusted_p=None,
        effective_alpha=applied,
        diagnostics=diag,
    )


def apply_method(method, batch, alpha=0.05, *, beta=0.8, cap_policy="cap-at-alpha"):
    """Dispatch one of the four procedures by its tag."""
    if method == "bonferroni":
        return bonferroni(batch, alpha)
    if method == "holm":
        return holm(batch, alpha)
    if method == "bh":
        return bh(batch, alpha)
    if method == "bea":
        return bea(batch, alpha, beta=beta, cap_policy=cap_policy)
    raise ValueError(f"unknown method {method!r}; expected one of {METHOD_ORDER}")
