"""Confusion metrics, the corrected-power mapping, and aggregation.

Sensitivity/specificity are computed against randomized ground-truth
labels; power is backed out of each method's effective significance
level through the two-sided normal-approximation design identity
``z(1 - alpha/2) + z(power) = C`` anchored at a baseline (alpha, power)
pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import std_normal_cdf, std_normal_quantile

__all__ = [
    "ConfusionCounts",
    "MethodRecord",
    "MethodSummary",
    "PowerBaseline",
    "aggregate",
    "confusion",
    "power_from_alpha",
    "sensitivity",
    "specificity",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels, rejected):
    """Cross-tabulate rejection decisions against ground-truth labels.

    ``labels`` may be a boolean is-true-positive vector or any object
    exposing one as ``.is_true_positive``.
    """
    is_positive = np.asarray(
        getattr(labels, "is_true_positive", labels), dtype=bool
    ).ravel()
    rejected = np.asarray(rejected, dtype=bool).ravel()
    if is_positive.shape != rejected.shape:
        raise ValueError("labels and rejections must have equal length")
    tp = int((is_positive & rejected).sum())
    fn = int((is_positive & ~rejected).sum())
    fp = int((~is_positive & rejected).sum())
    tn = int((~is_positive & ~rejected).sum())
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def sensitivity(counts):
    """True-positive rate, or ``None`` when there are no positives."""
    denom = counts.tp + counts.fn
    if denom == 0:
        return None
    return counts.tp / denom


def specificity(counts):
    """True-negative rate, or ``None`` when there are no negatives."""
    denom = counts.tn + counts.fp
    if denom == 0:
        return None
    return counts.tn / denom


@dataclass(frozen=True)
class PowerBaseline:
    """Anchor of the power mapping: power(baseline_alpha) = baseline_power."""

    baseline_alpha: float = 0.05
    baseline_power: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.baseline_alpha < 1.0:
            raise ValueError("baseline_alpha must lie in (0, 1)")
        if not 0.0 < self.baseline_power < 1.0:
            raise ValueError("baseline_power must lie in (0, 1)")

    @property
    def design_constant(self):
        """z(1 - baseline_alpha/2) + z(baseline_power)."""
        return std_normal_quantile(
            1.0 - self.baseline_alpha / 2.0
        ) + std_normal_quantile(self.baseline_power)


def power_from_alpha(effective_alpha, baseline=PowerBaseline()):
    """Power retained by a fixed design when tested at ``effective_alpha``.

    Computed as ``Phi(C - z(1 - effective_alpha/2))`` with ``C`` from the
    baseline, so it is strictly increasing in ``effective_alpha`` and
    returns the baseline power exactly at the baseline alpha.  The result
    is clamped into the open interval (0, 1).
    """
    a = float(effective_alpha)
    if not 0.0 < a <= 1.0:
        raise ValueError("effective_alpha must lie in (0, 1]")
    z = 0.0 if a == 1.0 else std_normal_quantile(1.0 - a / 2.0)
    power = std_normal_cdf(baseline.design_constant - z)
    return min(max(power, 1e-300), 1.0 - 1e-16)


@dataclass(frozen=True)
class MethodRecord:
    """One method's metrics on one replicate.

    ``sensitivity``/``specificity`` are ``None`` when the corresponding
    class was empty; ``effective_tests`` is populated for bea only.
    """

    method: str
    replicate: int
    n_tests: int
    n_significant: int
    sensitivity: float | None
    specificity: float | None
    power: float
    effective_alpha: float
    effective_tests: float | None
    warnings: int


@dataclass(frozen=True)
class MethodSummary:
    """Across-replicate mean/sd per method (undefined values skipped)."""

    method: str
    replicates_used: int
    mean_sensitivity: float | None
    sd_sensitivity: float | None
    mean_specificity: float | None
    sd_specificity: float | None
    mean_power: float
    sd_power: float | None
    mean_effective_alpha: float
    mean_effective_tests: float | None
    sensitivity_skipped: int
    specificity_skipped: int
    warnings: int


def _mean_sd(values):
    vals = [v for v in values if v is not None]
    skipped = len(values) - len(vals)
    if not vals:
        return None, None, skipped
    arr = np.asarray(vals, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if arr.size > 1 else None
    return mean, sd, skipped


def aggregate(records):
    """Aggregate per-replicate records into per-method summaries.

    Records must all belong to the same grid cell; grouping across cells
    is the caller's concern.  Returns summaries keyed by method, in first
    appearance order.
    """
    by_method = {}
    for rec in records:
        by_method.setdefault(rec.method, []).append(rec)
    out = {}
    for method, recs in by_method.items():
        mean_sens, sd_sens, sens_skip = _mean_sd([r.sensitivity for r in recs])
        mean_spec, sd_spec, spec_skip = _mean_sd([r.specificity for r in recs])
        mean_pow, sd_pow, _ = _mean_sd([r.power for r in recs])
        mean_alpha, _, _ = _mean_sd([r.effective_alpha for r in recs])
        mean_m2, _, _ = _mean_sd([r.effective_tests for r in recs])
        out[method] = MethodSummary(
            method=method,
            replicates_used=len(recs),
            mean_sensitivity=mean_sens,
            sd_sensitivity=sd_sens,
            mean_specificity=mean_spec,
            sd_specificity=sd_spec,
            mean_power=mean_pow,
            sd_power=sd_pow,
            mean_effective_alpha=mean_alpha,
            mean_effective_tests=mean_m2,
            sensitivity_skipped=sens_skip,
            specificity_skipped=spec_skip,
            warnings=sum(r.warnings for r in recs),
        )
    return out
