"""Confusion metrics, power mapping, and aggregation."""

import numpy as np
import pytest
from helpers import normal_cdf_oracle, normal_quantile_oracle

from mtcorrect.metrics import (
    ConfusionCounts,
    MethodRecord,
    PowerBaseline,
    aggregate,
    confusion,
    power_from_alpha,
    sensitivity,
    specificity,
)


def test_confusion_perfect_classifier():
    labels = np.array([True] * 4 + [False] * 6)
    rejected = labels.copy()
    c = confusion(labels, rejected)
    assert (c.tp, c.fp, c.tn, c.fn) == (4, 0, 6, 0)
    assert sensitivity(c) == 1.0
    assert specificity(c) == 1.0


def test_confusion_no_rejections():
    labels = np.array([True, False, True])
    c = confusion(labels, np.zeros(3, dtype=bool))
    assert (c.tp, c.fp) == (0, 0)


def test_confusion_direct_count():
    labels = np.array([True] * 4 + [False] * 6)
    rejected = np.array([True, True, True, False, True] + [False] * 5)
    c = confusion(labels, rejected)
    assert (c.tp, c.fp, c.tn, c.fn) == (3, 1, 5, 1)
    assert sensitivity(c) == pytest.approx(0.75)
    assert specificity(c) == pytest.approx(5 / 6)
    assert c.total == 10


def test_confusion_length_mismatch():
    with pytest.raises(ValueError):
        confusion(np.array([True, False]), np.array([True]))


def test_undefined_rates_flagged():
    assert sensitivity(ConfusionCounts(tp=0, fp=2, tn=3, fn=0)) is None
    assert specificity(ConfusionCounts(tp=1, fp=0, tn=0, fn=2)) is None


def test_power_identity_at_baseline():
    assert abs(power_from_alpha(0.05) - 0.8) <= 1e-9


def test_power_identity_for_random_baselines():
    rng = np.random.default_rng(12)
    for _ in range(50):
        a0 = float(rng.uniform(0.001, 0.5))
        p0 = float(rng.uniform(0.05, 0.99))
        base = PowerBaseline(baseline_alpha=a0, baseline_power=p0)
        assert abs(power_from_alpha(a0, base) - p0) <= 1e-9


def test_power_bonferroni_thousand_tests():
    # frozen from the erfc oracle: Phi(C - z(1 - 2.5e-5)) with C = z(0.975)+z(0.8)
    value = power_from_alpha(0.05 / 1000)
    constant = normal_quantile_oracle(0.975) + normal_quantile_oracle(0.8)
    oracle = normal_cdf_oracle(constant - normal_quantile_oracle(1 - 2.5e-5))
    assert abs(value - oracle) <= 1e-9
    assert abs(value - 0.105) <= 0.002


def test_power_at_bh_scale_effective_alpha():
    # step-up at rejection fraction 0.3 of alpha=0.05 -> effective 0.015
    value = power_from_alpha(0.015)
    assert abs(value - 0.62) <= 0.05
    constant = normal_quantile_oracle(0.975) + normal_quantile_oracle(0.8)
    oracle = normal_cdf_oracle(constant - normal_quantile_oracle(1 - 0.0075))
    assert abs(value - oracle) <= 1e-9


def test_power_strictly_monotone_on_grid():
    alphas = np.linspace(1e-6, 1.0, 1000)
    powers = [power_from_alpha(a) for a in alphas]
    assert np.all(np.diff(powers) > 0.0)


def test_power_domain():
    for bad in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            power_from_alpha(bad)
    assert 0.0 < power_from_alpha(1.0) < 1.0


def _record(method="bh", rep=0, sens=0.5, spec=0.9, power=0.6, m2=None):
    return MethodRecord(
        method=method,
        replicate=rep,
        n_tests=100,
        n_significant=30,
        sensitivity=sens,
        specificity=spec,
        power=power,
        effective_alpha=0.01,
        effective_tests=m2,
        warnings=0,
    )


def test_aggregate_identical_replicates_zero_sd():
    summary = aggregate([_record(rep=i) for i in range(5)])["bh"]
    assert summary.mean_sensitivity == pytest.approx(0.5)
    assert summary.sd_sensitivity == pytest.approx(0.0)
    assert summary.replicates_used == 5


def test_aggregate_two_point_example():
    summary = aggregate([_record(rep=0, sens=0.6), _record(rep=1, sens=0.8)])["bh"]
    assert summary.mean_sensitivity == pytest.approx(0.7)
    assert summary.sd_sensitivity == pytest.approx(0.1414, abs=1e-4)


def test_aggregate_skips_undefined():
    records = [_record(rep=i) for i in range(99)] + [_record(rep=99, sens=None)]
    summary = aggregate(records)["bh"]
    assert summary.mean_sensitivity == pytest.approx(0.5)
    assert summary.sensitivity_skipped == 1
    assert summary.replicates_used == 100


def test_aggregate_mean_m2_for_bea_only():
    rows = [_record(method="bea", rep=0, m2=2.4), _record(method="bea", rep=1, m2=2.6)]
    assert aggregate(rows)["bea"].mean_effective_tests == pytest.approx(2.5)
    assert aggregate([_record(rep=0)])["bh"].mean_effective_tests is None


def test_metrics_invariant_under_relabeling():
    rng = np.random.default_rng(0)
    labels = rng.random(200) < 0.3
    rejected = rng.random(200) < 0.4
    perm = rng.permutation(200)
    a = confusion(labels, rejected)
    b = confusion(labels[perm], rejected[perm])
    assert (a.tp, a.fp, a.tn, a.fn) == (b.tp, b.fp, b.tn, b.fn)


def test_baseline_validation():
    with pytest.raises(ValueError):
        PowerBaseline(baseline_alpha=0.0)
    with pytest.raises(ValueError):
        PowerBaseline(baseline_power=1.0)
