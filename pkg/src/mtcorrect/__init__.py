"""mtcorrect: multiple-testing corrections with a seeded study harness.

Core pieces:

- :mod:`mtcorrect.adjust` -- Bonferroni, Holm, Benjamini-Hochberg and the
  beta-exponential adjustment over p-value batches.
- :mod:`mtcorrect.numerics` -- normal CDF/quantile, logistic Wald fits,
  derived random streams.
- :mod:`mtcorrect.simulate` / :mod:`mtcorrect.grid` -- replicated cohort
  studies over (sample size, biomarker count, positive rate) grids.
- :mod:`mtcorrect.metrics` -- sensitivity/specificity and the
  corrected-power mapping.
- :mod:`mtcorrect.cli` / :mod:`mtcorrect.service` -- command line and
  FastAPI front ends.
"""

from ._version import __version__
from .adjust import (
    METHOD_ORDER,
    AdjustmentOutcome,
    BeaDiagnostics,
    PValueBatch,
    apply_method,
    bea,
    bea_effective_count,
    bh,
    bonferroni,
    holm,
)
from .metrics import (
    ConfusionCounts,
    PowerBaseline,
    aggregate,
    confusion,
    power_from_alpha,
    sensitivity,
    specificity,
)
from .numerics import (
    LogisticFit,
    RandomStream,
    derive_stream,
    fit_logistic_univariate,
    std_normal_cdf,
    std_normal_quantile,
)
from .simulate import (
    CohortConfig,
    CohortDataset,
    StudyConfig,
    TruthLabels,
    assign_truth_labels,
    calibrate_positive_rate,
    compute_pvalues,
    direct_p_generate,
    generate_cohort,
    run_study,
)

__all__ = [
    "__version__",
    "METHOD_ORDER",
    "AdjustmentOutcome",
    "BeaDiagnostics",
    "CohortConfig",
    "CohortDataset",
    "ConfusionCounts",
    "LogisticFit",
    "PValueBatch",
    "PowerBaseline",
    "RandomStream",
    "StudyConfig",
    "TruthLabels",
    "aggregate",
    "apply_method",
    "assign_truth_labels",
    "bea",
    "bea_effective_count",
    "bh",
    "bonferroni",
    "calibrate_positive_rate",
    "compute_pvalues",
    "confusion",
    "derive_stream",
    "direct_p_generate",
    "fit_logistic_univariate",
    "generate_cohort",
    "holm",
    "power_from_alpha",
    "run_study",
    "sensitivity",
    "specificity",
    "std_normal_cdf",
    "std_normal_quantile",
]
