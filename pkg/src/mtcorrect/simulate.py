"""Seeded cohort simulation and replicated method-comparison studies.

Two generators feed the comparison: a data-driven path that simulates a
patient cohort with a calibrated share of truly associated biomarkers and
derives p-values through per-biomarker logistic Wald tests, and a direct
p-value path that manufactures batches with an exact raw-significant
count.  Ground-truth labels follow the randomized scheme: raw-significant
tests are labelled true positives with a fixed probability, everything at
or above the raw level is a true negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .adjust import CAP_POLICIES, METHOD_ORDER, PValueBatch, apply_method
from .numerics import derive_stream, logistic_wald_batch, std_normal_cdf, std_normal_quantile

__all__ = [
    "GENERATOR_MODES",
    "CalibrationError",
    "CalibrationResult",
    "CohortConfig",
    "CohortDataset",
    "CohortGenerationError",
    "PValueResult",
    "ReplicateError",
    "ReplicateResults",
    "StudyConfig",
    "StudyError",
    "TruthLabels",
    "assign_truth_labels",
    "calibrate_positive_rate",
    "compute_pvalues",
    "direct_p_generate",
    "generate_cohort",
    "run_study",
    "solve_associated_fraction",
    "two_sample_power",
]

GENERATOR_MODES = ("data-driven", "direct-p")


class CohortGenerationError(RuntimeError):
    """Could not draw a two-class disease-status vector."""


class CalibrationError(RuntimeError):
    """The target raw-significant rate is unreachable for this design."""


class StudyError(RuntimeError):
    """Too many replicates failed for the study to be trusted."""


@dataclass(frozen=True)
class CohortConfig:
    """Design of one simulated cohort cell."""

    n_patients: int
    m_biomarkers: int
    target_positive_rate: float
    prevalence: float = 0.5
    effect_size: float = 0.25
    generator_mode: str = "data-driven"
    direct_p_shape: float = 0.15
    master_seed: int = 0

    def __post_init__(self):
        if self.n_patients < 20:
            raise ValueError("n_patients must be at least 20")
        if self.m_biomarkers < 1:
            raise ValueError("m_biomarkers must be at least 1")
        if not 0.0 < self.target_positive_rate < 1.0:
            raise ValueError("target_positive_rate must lie in (0, 1)")
        if not 0.0 < self.prevalence < 1.0:
            raise ValueError("prevalence must lie in (0, 1)")
        if self.effect_size < 0.0:
            raise ValueError("effect_size must be nonnegative")
        if self.generator_mode not in GENERATOR_MODES:
            raise ValueError(f"generator_mode must be one of {GENERATOR_MODES}")
        if self.direct_p_shape <= 0.0:
            raise ValueError("direct_p_shape must be positive")


@dataclass(frozen=True)
class CohortDataset:
    """Disease status plus a patients x biomarkers expression matrix."""

    disease_status: np.ndarray
    expression: np.ndarray
    truly_associated: np.ndarray


@dataclass(frozen=True)
class TruthLabels:
    """Randomized ground truth: positives only ever among raw-significant tests."""

    is_true_positive: np.ndarray
    label_probability: float


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of rate calibration for the data-driven generator."""

    associated_fraction: float
    effect_size: float
    analytic_power: float
    pilot_rate: float
    adjustments: int


@dataclass(frozen=True)
class PValueResult:
    """A p-value batch plus fit-quality counters from the screening step."""

    batch: PValueBatch
    n_unconverged: int
    n_degenerate: int

    @property
    def warnings(self):
        return self.n_unconverged + self.n_degenerate


def two_sample_power(effect_size, n_patients, alpha=0.05, prevalence=0.5):
    """Analytic two-sided power to detect a mean shift between the groups.

    Normal approximation with unit variance and group sizes set by the
    prevalence; used only to seed the rate calibration, which is then
    verified empirically.
    """
    n1 = n_patients * prevalence
    n0 = n_patients * (1.0 - prevalence)
    se = np.sqrt(1.0 / n1 + 1.0 / n0)
    crit = std_normal_quantile(1.0 - alpha / 2.0)
    shift = effect_size / se
    return std_normal_cdf(shift - crit) + std_normal_cdf(-shift - crit)


def solve_associated_fraction(target_rate, marker_power, alpha=0.05):
    """Fraction of associated markers so the expected raw rate hits target.

    Solves ``target = f * power + (1 - f) * alpha`` and clamps to [0, 1].
    A target at or below ``alpha`` needs no signal at all (the nulls alone
    supply it), so the fraction is 0.
    """
    if target_rate <= alpha:
        return 0.0
    if marker_power <= alpha:
        return 1.0
    return min(1.0, (target_rate - alpha) / (marker_power - alpha))


def _draw_status(rng, n_patients, prevalence, attempts=10):
    for _ in range(attempts):
        status = rng.random(n_patients) < prevalence
        if status.any() and not status.all():
            return status
    raise CohortGenerationError(
        f"single-class disease status after {attempts} draws "
        f"(n_patients={n_patients}, prevalence={prevalence})"
    )


def _generate_data_driven(config, replicate_index, fraction, effect_size, role="cohort"):
    stream = derive_stream(config.master_seed, role, replicate_index)
    rng = stream.generator
    status = _draw_status(rng, config.n_patients, config.prevalence)
    m = config.m_biomarkers
    k = int(round(fraction * m))
    associated = np.zeros(m, dtype=bool)
    associated[rng.permutation(m)[:k]] = True
    expression = rng.standard_normal((config.n_patients, m))
    if k and effect_size != 0.0:
        expression[:, associated] += effect_size * status[:, None]
    return CohortDataset(
        disease_status=status.astype(np.int8),
        expression=expression,
        truly_associated=associated,
    )


def _empirical_rate(config, fraction, effect_size, alpha, replicates, markers, attempt):
    pilot = CohortConfig(
        n_patients=config.n_patients,
        m_biomarkers=markers,
        target_positive_rate=config.target_positive_rate,
        prevalence=config.prevalence,
        effect_size=effect_size,
        generator_mode="data-driven",
        direct_p_shape=config.direct_p_shape,
        master_seed=config.master_seed,
    )
    below = 0
    total = 0
    for rep in range(replicates):
        dataset = _generate_data_driven(
            pilot, rep, fraction, effect_size, role=f"pilot-{attempt}"
        )
        result = compute_pvalues(dataset)
        below += int((result.batch.p_values < alpha).sum())
        total += markers
    return below / total


def calibrate_positive_rate(
    config,
    alpha=0.05,
    *,
    pilot_replicates=20,
    pilot_markers=200,
    tolerance=0.03,
    max_adjustments=10,
):
    """Calibrate the associated-marker fraction for the data-driven generator.

    Solves the analytic rate equation for the fraction, then verifies with
    a small pilot that the empirical raw-significant rate lands within
    ``tolerance`` of the target.  If the target is out of reach (the
    per-marker power is too low even with every marker associated) the
    effect size is stepped up by 0.1 and the procedure repeats, up to
    ``max_adjustments`` times before giving up.
    """
    if config.generator_mode != "data-driven":
        raise ValueError("calibration applies to the data-driven generator only")
    target = config.target_positive_rate
    last = None
    for attempt in range(max_adjustments + 1):
        effect = config.effect_size + 0.1 * attempt
        marker_power = two_sample_power(
            effect, config.n_patients, alpha, config.prevalence
        )
        fraction = solve_associated_fraction(target, marker_power, alpha)
        empirical = _empirical_rate(
            config, fraction, effect, alpha, pilot_replicates, pilot_markers, attempt
        )
        last = CalibrationResult(
            associated_fraction=fraction,
            effect_size=effect,
            analytic_power=marker_power,
            pilot_rate=empirical,
            adjustments=attempt,
        )
        if abs(empirical - target) <= tolerance:
            return last
    raise CalibrationError(
        f"target rate {target} unreachable after {max_adjustments} effect-size "
        f"adjustments; last pilot rate {last.pilot_rate:.4f} at effect size "
        f"{last.effect_size:.2f}"
    )


def generate_cohort(config, replicate_index, calibration=None, alpha=0.05):
    """Generate one cohort replicate for the data-driven generator.

    ``calibration`` carries the associated fraction and (possibly stepped
    up) effect size from :func:`calibrate_positive_rate`; without it the
    fraction is solved analytically from the configured effect size, which
    is adequate everywhere the pilot would not have adjusted anything.
    Deterministic given ``(config.master_seed, replicate_index)``.
    """
    if config.generator_mode != "data-driven":
        raise ValueError("generate_cohort applies to the data-driven generator only")
    if calibration is None:
        marker_power = two_sample_power(
            config.effect_size, config.n_patients, alpha, config.prevalence
        )
        fraction = solve_associated_fraction(
            config.target_positive_rate, marker_power, alpha
        )
        effect = config.effect_size
    else:
        fraction = calibration.associated_fraction
        effect = calibration.effect_size
    return _generate_data_driven(config, replicate_index, fraction, effect)


def compute_pvalues(dataset, max_iterations=50, tolerance=1e-8):
    """Per-biomarker logistic Wald p-values for one cohort.

    Non-converged fits (separation: overwhelming evidence) are recorded as
    p = 0, constant biomarkers as p = 1; both are counted as warnings.
    """
    fits = logistic_wald_batch(
        dataset.disease_status,
        dataset.expression,
        max_iterations=max_iterations,
        tolerance=tolerance,
    )
    p = fits.p_value.copy()
    p[~fits.converged] = 0.0
    p[fits.degenerate] = 1.0
    ids = tuple(f"b{i + 1}" for i in range(p.size))
    return PValueResult(
        batch=PValueBatch(p_values=p, test_ids=ids),
        n_unconverged=int((~fits.converged).sum()),
        n_degenerate=int(fits.degenerate.sum()),
    )


def direct_p_generate(config, replicate_index, alpha=0.05):
    """Manufacture a batch with an exact raw-significant count.

    Exactly ``round(rate * m)`` p-values fall below ``alpha``, drawn as
    ``alpha * U ** (1/shape)`` (concentrated near zero for shape < 1); the
    remainder is uniform on [alpha, 1).  Positions are shuffled.
    """
    if config.generator_mode != "direct-p":
        raise ValueError("direct_p_generate applies to the direct-p generator only")
    stream = derive_stream(config.master_seed, "direct-p", replicate_index)
    rng = stream.generator
    m = config.m_biomarkers
    k = int(round(config.target_positive_rate * m))
    significant = alpha * rng.random(k) ** (1.0 / config.direct_p_shape)
    rest = rng.uniform(alpha, 1.0, m - k)
    p = np.empty(m, dtype=float)
    positions = rng.permutation(m)
    p[positions[:k]] = significant
    p[positions[k:]] = rest
    ids = tuple(f"b{i + 1}" for i in range(m))
    return PValueBatch(p_values=p, test_ids=ids)


def assign_truth_labels(batch, alpha, label_probability, stream):
    """Randomly label raw-significant tests as true positives.

    Each test with p < alpha is a true positive with ``label_probability``
    independently of its p-value; every other test is a true negative.
    """
    if not 0.0 < label_probability <= 1.0:
        raise ValueError("label_probability must lie in (0, 1]")
    draws = stream.generator.random(len(batch))
    is_tp = (batch.p_values < alpha) & (draws < label_probability)
    return TruthLabels(is_true_positive=is_tp, label_probability=label_probability)


@dataclass(frozen=True)
class StudyConfig:
    """One replicated comparison cell: generator plus analysis settings."""

    cohort: CohortConfig
    alpha: float = 0.05
    bea_beta: float = 0.8
    replicates: int = 100
    methods: tuple[str, ...] = METHOD_ORDER
    cap_policy: str = "cap-at-alpha"
    label_probability: float = 0.99
    baseline_power: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 <= self.bea_beta < 1.0:
            raise ValueError("bea_beta must lie in [0, 1)")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must not be empty")
        for method in methods:
            if method not in METHOD_ORDER:
                raise ValueError(f"unknown method {method!r}")
        # canonical order, duplicates dropped
        object.__setattr__(
            self, "methods", tuple(m for m in METHOD_ORDER if m in methods)
        )
        if self.cap_policy not in CAP_POLICIES:
            raise ValueError(f"cap_policy must be one of {CAP_POLICIES}")
        if not 0.0 < self.label_probability <= 1.0:
            raise ValueError("label_probability must lie in (0, 1]")
        if not 0.0 < self.baseline_power < 1.0:
            raise ValueError("baseline_power must lie in (0, 1)")


@dataclass(frozen=True)
class ReplicateError:
    replicate: int
    message: str


@dataclass(frozen=True)
class ReplicateResults:
    """Full per-replicate, per-method record set of one study cell."""

    config: StudyConfig
    records: tuple[metrics.MethodRecord, ...]
    errors: tuple[ReplicateError, ...]
    calibration: CalibrationResult | None


def _replicate_batch(study, replicate, calibration):
    if study.cohort.generator_mode == "direct-p":
        return direct_p_generate(study.cohort, replicate, study.alpha), 0, 0
    dataset = generate_cohort(study.cohort, replicate, calibration, study.alpha)
    result = compute_pvalues(dataset)
    return result.batch, result.n_unconverged, result.n_degenerate


def run_study(study):
    """Run every replicate of one cell and score every requested method.

    Replicates are mutually independent (each draws from its own derived
    streams), so the output is a pure function of the configuration and
    identical under any execution order.  Replicate-level generation
    failures are collected; the study aborts only if more than 5% of
    replicates fail.
    """
    calibration = None
    if study.cohort.generator_mode == "data-driven":
        calibration = calibrate_positive_rate(study.cohort, study.alpha)
    baseline = metrics.PowerBaseline(
        baseline_alpha=study.alpha, baseline_power=study.baseline_power
    )
    records = []
    errors = []
    for rep in range(study.replicates):
        try:
            batch, n_unconverged, n_degenerate = _replicate_batch(
                study, rep, calibration
            )
        except CohortGenerationError as exc:
            errors.append(ReplicateError(replicate=rep, message=str(exc)))
            continue
        labels = assign_truth_labels(
            batch,
            study.alpha,
            study.label_probability,
            derive_stream(study.cohort.master_seed, "labels", rep),
        )
        n_significant = int((batch.p_values < study.alpha).sum())
        for method in study.methods:
            outcome = apply_method(
                method,
                batch,
                study.alpha,
                beta=study.bea_beta,
                cap_policy=study.cap_policy,
            )
            counts = metrics.confusion(labels, outcome.rejected)
            records.append(
                metrics.MethodRecord(
                    method=method,
                    replicate=rep,
                    n_tests=len(batch),
                    n_significant=n_significant,
                    sensitivity=metrics.sensitivity(counts),
                    specificity=metrics.specificity(counts),
                    power=metrics.power_from_alpha(outcome.effective_alpha, baseline),
                    effective_alpha=outcome.effective_alpha,
                    effective_tests=(
                        outcome.diagnostics.effective_tests
                        if outcome.diagnostics is not None
                        else None
                    ),
                    warnings=n_unconverged + n_degenerate,
                )
            )
    if len(errors) > 0.05 * study.replicates:
        raise StudyError(
            f"{len(errors)} of {study.replicates} replicates failed: "
            f"{errors[0].message}"
        )
    return ReplicateResults(
        config=study,
        records=tuple(records),
        errors=tuple(errors),
        calibration=calibration,
    )
