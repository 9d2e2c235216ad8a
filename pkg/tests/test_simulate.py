"""Generators, labeling, calibration, and the replicated study loop."""

import numpy as np
import pytest

from mtcorrect.adjust import PValueBatch
from mtcorrect.numerics import derive_stream
from mtcorrect.simulate import (
    CohortConfig,
    CohortGenerationError,
    StudyConfig,
    StudyError,
    assign_truth_labels,
    calibrate_positive_rate,
    compute_pvalues,
    direct_p_generate,
    generate_cohort,
    run_study,
    solve_associated_fraction,
    two_sample_power,
)


def direct_config(**kwargs):
    base = dict(
        n_patients=100,
        m_biomarkers=1000,
        target_positive_rate=0.3,
        generator_mode="direct-p",
        master_seed=42,
    )
    base.update(kwargs)
    return CohortConfig(**base)


def data_config(**kwargs):
    base = dict(
        n_patients=400,
        m_biomarkers=200,
        target_positive_rate=0.3,
        generator_mode="data-driven",
        master_seed=42,
    )
    base.update(kwargs)
    return CohortConfig(**base)


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            data_config(n_patients=10)
        with pytest.raises(ValueError):
            data_config(m_biomarkers=0)
        with pytest.raises(ValueError):
            data_config(target_positive_rate=0.0)
        with pytest.raises(ValueError):
            data_config(generator_mode="bootstrap")


class TestDirectP:
    def test_exact_significant_count(self):
        for rep in range(20):
            batch = direct_p_generate(direct_config(), rep)
            assert int((batch.p_values < 0.05).sum()) == 300

    def test_rounding_can_reach_zero(self):
        config = direct_config(m_biomarkers=10, target_positive_rate=0.01)
        batch = direct_p_generate(config, 0)
        assert int((batch.p_values < 0.05).sum()) == 0

    def test_deterministic(self):
        a = direct_p_generate(direct_config(), 3)
        b = direct_p_generate(direct_config(), 3)
        assert np.array_equal(a.p_values, b.p_values)
        assert a.p_values is not b.p_values

    def test_shape_one_is_uniform_below_alpha(self):
        config = direct_config(direct_p_shape=1.0, m_biomarkers=2000)
        pooled = np.concatenate(
            [direct_p_generate(config, rep).p_values for rep in range(20)]
        )
        significant = pooled[pooled < 0.05] / 0.05
        # Kolmogorov-Smirnov distance against U(0,1)
        grid = np.sort(significant)
        ecdf = np.arange(1, grid.size + 1) / grid.size
        assert np.max(np.abs(ecdf - grid)) < 0.02

    def test_default_shape_median(self):
        # median of alpha*U^(1/a) is alpha*0.5^(1/a) ~ 4.905e-4 for a=0.15
        config = direct_config(m_biomarkers=5000)
        pooled = np.concatenate(
            [direct_p_generate(config, rep).p_values for rep in range(40)]
        )
        significant = pooled[pooled < 0.05]
        assert significant.size == 1500 * 40
        assert abs(np.median(significant) - 4.905e-4) < 5e-5

    def test_mode_guard(self):
        with pytest.raises(ValueError):
            direct_p_generate(data_config(), 0)


class TestCalibrationMath:
    def test_fraction_zero_when_target_at_alpha(self):
        assert solve_associated_fraction(0.05, 0.9, alpha=0.05) == 0.0
        assert solve_associated_fraction(0.04, 0.9, alpha=0.05) == 0.0

    def test_hand_worked_fraction(self):
        f = solve_associated_fraction(0.30, 0.9, alpha=0.05)
        assert f == pytest.approx((0.30 - 0.05) / (0.9 - 0.05))
        assert f == pytest.approx(0.294, abs=1e-3)

    def test_clamped_at_one(self):
        assert solve_associated_fraction(0.9, 0.5, alpha=0.05) == 1.0

    def test_two_sample_power_null_is_alpha(self):
        assert two_sample_power(0.0, 1000) == pytest.approx(0.05)

    def test_two_sample_power_increases_with_n(self):
        assert two_sample_power(0.25, 1000) > two_sample_power(0.25, 300)


class TestCalibrationPilot:
    def test_on_target_without_adjustment(self):
        result = calibrate_positive_rate(data_config(n_patients=1000))
        assert result.adjustments == 0
        assert abs(result.pilot_rate - 0.3) <= 0.03
        assert 0.0 < result.associated_fraction < 1.0

    def test_steps_up_effect_size_when_underpowered(self):
        # rate 0.7 is unreachable at n=300 with the default effect size
        result = calibrate_positive_rate(
            data_config(n_patients=300, target_positive_rate=0.7)
        )
        assert result.adjustments >= 1
        assert result.effect_size > 0.25
        assert abs(result.pilot_rate - 0.7) <= 0.03

    def test_deterministic(self):
        a = calibrate_positive_rate(data_config())
        b = calibrate_positive_rate(data_config())
        assert a == b


class TestGenerateCohort:
    def test_deterministic(self):
        a = generate_cohort(data_config(), 5)
        b = generate_cohort(data_config(), 5)
        assert np.array_equal(a.expression, b.expression)
        assert np.array_equal(a.disease_status, b.disease_status)
        assert np.array_equal(a.truly_associated, b.truly_associated)

    def test_replicates_differ(self):
        a = generate_cohort(data_config(), 0)
        b = generate_cohort(data_config(), 1)
        assert not np.array_equal(a.expression, b.expression)

    def test_both_classes_present(self):
        dataset = generate_cohort(data_config(), 0)
        assert 0 < dataset.disease_status.sum() < dataset.disease_status.size

    def test_effect_size_moment(self):
        config = data_config(
            n_patients=1000, m_biomarkers=50, effect_size=0.5, target_positive_rate=0.3
        )
        dataset = generate_cohort(config, 0)
        sick = dataset.disease_status == 1
        assoc = dataset.truly_associated
        diffs = (
            dataset.expression[sick][:, assoc].mean(axis=0)
            - dataset.expression[~sick][:, assoc].mean(axis=0)
        )
        assert abs(diffs.mean() - 0.5) <= 0.1

    def test_null_config_rate_near_alpha(self):
        config = data_config(
            n_patients=250,
            m_biomarkers=500,
            effect_size=0.0,
            target_positive_rate=0.05,
        )
        below = 0
        total = 0
        for rep in range(20):
            result = compute_pvalues(generate_cohort(config, rep))
            below += int((result.batch.p_values < 0.05).sum())
            total += len(result.batch)
        assert abs(below / total - 0.05) <= 0.02

    def test_generation_error_on_pathological_prevalence(self):
        config = data_config(n_patients=20, prevalence=0.999)
        with pytest.raises(CohortGenerationError):
            for rep in range(200):
                generate_cohort(config, rep)


class TestComputePvalues:
    def test_constant_column_flagged_as_one(self):
        dataset = generate_cohort(data_config(m_biomarkers=5), 1)
        dataset.expression[:, 2] = 7.0
        result = compute_pvalues(dataset)
        assert result.batch.p_values[2] == 1.0
        assert result.n_degenerate == 1

    def test_overwhelming_effect_tiny_pvalue(self):
        config = data_config(n_patients=1000, m_biomarkers=1, effect_size=3.0,
                             target_positive_rate=0.9)
        dataset = generate_cohort(config, 0, calibration=None)
        # force the single marker to carry the effect
        status = dataset.disease_status.astype(float)
        expr = np.random.default_rng(0).standard_normal((1000, 1)) + 3.0 * status[:, None]
        result = compute_pvalues(
            type(dataset)(disease_status=dataset.disease_status,
                          expression=expr,
                          truly_associated=np.array([True]))
        )
        assert result.batch.p_values[0] < 1e-10

    def test_null_pvalues_uniform(self):
        config = data_config(
            n_patients=400, m_biomarkers=100, effect_size=0.0, target_positive_rate=0.05
        )
        pooled = np.concatenate(
            [compute_pvalues(generate_cohort(config, rep)).batch.p_values
             for rep in range(100)]
        )
        assert pooled.size == 10_000
        grid = np.sort(pooled)
        ecdf = np.arange(1, grid.size + 1) / grid.size
        assert np.max(np.abs(ecdf - grid)) < 0.05


class TestTruthLabels:
    def make_batch(self, below, above):
        p = np.concatenate([np.linspace(1e-4, 0.049, below), np.linspace(0.06, 0.99, above)])
        return PValueBatch.from_values(p)

    def test_no_significant_means_all_negative(self):
        batch = self.make_batch(0, 20)
        labels = assign_truth_labels(batch, 0.05, 0.5, derive_stream(1, "labels", 0))
        assert not labels.is_true_positive.any()

    def test_probability_one_labels_every_significant(self):
        batch = self.make_batch(15, 10)
        labels = assign_truth_labels(batch, 0.05, 1.0, derive_stream(1, "labels", 0))
        assert labels.is_true_positive.sum() == 15
        assert not labels.is_true_positive[15:].any()

    def test_binomial_concentration(self):
        batch = self.make_batch(10_000, 0)
        labels = assign_truth_labels(batch, 0.05, 0.5, derive_stream(7, "labels", 0))
        fraction = labels.is_true_positive.mean()
        assert abs(fraction - 0.5) <= 0.015

    def test_labels_carry_no_p_information(self):
        config = direct_config(m_biomarkers=1000)
        pos_means = []
        neg_means = []
        for rep in range(100):
            batch = direct_p_generate(config, rep)
            labels = assign_truth_labels(
                batch, 0.05, 0.5, derive_stream(config.master_seed, "labels", rep)
            )
            significant = batch.p_values < 0.05
            pos_means.append(batch.p_values[significant & labels.is_true_positive].mean())
            neg_means.append(batch.p_values[significant & ~labels.is_true_positive].mean())
        assert abs(np.mean(pos_means) - np.mean(neg_means)) < 0.005

    def test_probability_domain(self):
        batch = self.make_batch(2, 2)
        with pytest.raises(ValueError):
            assign_truth_labels(batch, 0.05, 0.0, derive_stream(1, "labels", 0))
        with pytest.raises(ValueError):
            assign_truth_labels(batch, 0.05, 1.5, derive_stream(1, "labels", 0))


class TestRunStudy:
    def test_single_replicate_deterministic(self):
        study = StudyConfig(cohort=direct_config(), replicates=1)
        a = run_study(study)
        b = run_study(study)
        assert a.records == b.records

    def test_record_layout(self):
        study = StudyConfig(cohort=direct_config(m_biomarkers=200), replicates=3)
        results = run_study(study)
        assert len(results.records) == 3 * 4
        methods = [r.method for r in results.records[:4]]
        assert methods == ["bonferroni", "holm", "bh", "bea"]
        bea_records = [r for r in results.records if r.method == "bea"]
        assert all(r.effective_tests is not None for r in bea_records)
        bh_records = [r for r in results.records if r.method == "bh"]
        assert all(r.effective_tests is None for r in bh_records)

    def test_empty_positive_class_leaves_sensitivity_undefined(self):
        config = direct_config(m_biomarkers=10, target_positive_rate=0.01)
        study = StudyConfig(cohort=config, replicates=2, methods=("bonferroni",))
        results = run_study(study)
        for rec in results.records:
            assert rec.sensitivity is None
            assert rec.specificity == 1.0

    def test_methods_subset_and_order(self):
        study = StudyConfig(
            cohort=direct_config(m_biomarkers=50),
            replicates=1,
            methods=("bea", "bonferroni"),
        )
        results = run_study(study)
        assert [r.method for r in results.records] == ["bonferroni", "bea"]

    def test_replicate_independence(self):
        base = StudyConfig(cohort=direct_config(m_biomarkers=100), replicates=3)
        longer = StudyConfig(cohort=direct_config(m_biomarkers=100), replicates=5)
        short_records = run_study(base).records
        long_records = [r for r in run_study(longer).records if r.replicate < 3]
        assert list(short_records) == long_records

    def test_effective_alpha_and_power_ordering_per_replicate(self):
        study = StudyConfig(cohort=direct_config(m_biomarkers=300), replicates=20)
        results = run_study(study)
        by_rep = {}
        for rec in results.records:
            by_rep.setdefault(rec.replicate, {})[rec.method] = rec
        for methods in by_rep.values():
            assert methods["bonferroni"].effective_alpha <= methods["holm"].effective_alpha
            assert methods["bonferroni"].power <= methods["holm"].power

    def test_threshold_sensitivity_monotone_in_alpha(self):
        from mtcorrect.adjust import bonferroni
        from mtcorrect.metrics import confusion, sensitivity

        batch = direct_p_generate(direct_config(m_biomarkers=500), 0)
        labels = assign_truth_labels(
            batch, 0.05, 0.5, derive_stream(42, "labels", 0)
        )
        last = -1.0
        for alpha in (0.001, 0.005, 0.02, 0.05, 0.2):
            rejected = bonferroni(batch, alpha).rejected
            sens = sensitivity(confusion(labels, rejected))
            assert sens >= last
            last = sens

    def test_failure_budget_enforced(self, monkeypatch):
        import mtcorrect.simulate as sim

        real = sim.generate_cohort

        def flaky(config, replicate_index, calibration=None, alpha=0.05):
            if replicate_index % 3 == 0:
                raise CohortGenerationError("synthetic failure")
            return real(config, replicate_index, calibration, alpha)

        monkeypatch.setattr(sim, "generate_cohort", flaky)
        study = StudyConfig(cohort=data_config(m_biomarkers=20), replicates=10)
        with pytest.raises(StudyError):
            run_study(study)

    def test_small_failure_fraction_tolerated(self, monkeypatch):
        import mtcorrect.simulate as sim

        real = sim.generate_cohort

        def flaky(config, replicate_index, calibration=None, alpha=0.05):
            if replicate_index == 17:
                raise CohortGenerationError("synthetic failure")
            return real(config, replicate_index, calibration, alpha)

        monkeypatch.setattr(sim, "generate_cohort", flaky)
        study = StudyConfig(cohort=data_config(m_biomarkers=20), replicates=40)
        results = run_study(study)
        assert len(results.errors) == 1
        assert len(results.records) == 39 * 4
