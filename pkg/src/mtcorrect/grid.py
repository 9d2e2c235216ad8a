"""Multi-cell study grids: every (sample size, biomarker count, rate) cell.

Cells are independent studies with their own derived master seeds, so a
grid can be executed sequentially or across processes with identical
results.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .adjust import CAP_POLICIES, METHOD_ORDER
from .numerics import derive_seed
from .simulate import (
    GENERATOR_MODES,
    CalibrationError,
    CohortConfig,
    CohortGenerationError,
    ReplicateResults,
    StudyConfig,
    StudyError,
    run_study,
)

__all__ = [
    "CellResult",
    "GridQualityError",
    "GridResults",
    "StudyGridConfig",
    "cell_study_config",
    "run_grid",
]


class GridQualityError(RuntimeError):
    """A cell exceeded the replicate-failure budget."""

    def __init__(self, cell, cause):
        self.cell = cell
        super().__init__(f"cell {cell} failed: {cause}")


@dataclass(frozen=True)
class StudyGridConfig:
    """Grid of study cells sharing analysis settings."""

    sample_sizes: tuple[int, ...]
    biomarker_counts: tuple[int, ...]
    positive_rates: tuple[float, ...]
    alpha: float = 0.05
    bea_beta: float = 0.8
    baseline_power: float = 0.8
    replicates: int = 100
    generator_mode: str = "data-driven"
    label_probability: float = 0.99
    cap_policy: str = "cap-at-alpha"
    methods: tuple[str, ...] = METHOD_ORDER
    master_seed: int = 0
    effect_size: float = 0.25
    prevalence: float = 0.5
    direct_p_shape: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(v) for v in self.sample_sizes))
        object.__setattr__(
            self, "biomarker_counts", tuple(int(v) for v in self.biomarker_counts)
        )
        object.__setattr__(
            self, "positive_rates", tuple(float(v) for v in self.positive_rates)
        )
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        if not self.sample_sizes or not self.biomarker_counts or not self.positive_rates:
            raise ValueError("grid axes must not be empty")
        if self.generator_mode not in GENERATOR_MODES:
            raise ValueError(f"generator_mode must be one of {GENERATOR_MODES}")
        if self.cap_policy not in CAP_POLICIES:
            raise ValueError(f"cap_policy must be one of {CAP_POLICIES}")
        for m in self.methods:
            if m not in METHOD_ORDER:
                raise ValueError(f"unknown method {m!r}")

    def cells(self):
        """Cells in configuration order: sample size, then count, then rate."""
        return tuple(
            itertools.product(self.sample_sizes, self.biomarker_counts, self.positive_rates)
        )


def cell_study_config(grid, sample_size, m_biomarkers, positive_rate):
    """Build the per-cell study; each cell gets its own folded master seed."""
    cell_seed = derive_seed(
        grid.master_seed,
        f"cell|{sample_size}|{m_biomarkers}|{positive_rate:.10g}",
    )
    cohort = CohortConfig(
        n_patients=sample_size,
        m_biomarkers=m_biomarkers,
        target_positive_rate=positive_rate,
        prevalence=grid.prevalence,
        effect_size=grid.effect_size,
        generator_mode=grid.generator_mode,
        direct_p_shape=grid.direct_p_shape,
        master_seed=cell_seed,
    )
    return StudyConfig(
        cohort=cohort,
        alpha=grid.alpha,
        bea_beta=grid.bea_beta,
        replicates=grid.replicates,
        methods=grid.methods,
        cap_policy=grid.cap_policy,
        label_probability=grid.label_probability,
        baseline_power=grid.baseline_power,
    )


@dataclass(frozen=True)
class CellResult:
    sample_size: int
    m_biomarkers: int
    positive_rate: float
    results: ReplicateResults


@dataclass(frozen=True)
class GridResults:
    config: StudyGridConfig
    cells: tuple[CellResult, ...]

    @property
    def failed_replicates(self):
        return sum(len(c.results.errors) for c in self.cells)

    @property
    def warning_totals(self):
        seen = {}
        for cell in self.cells:
            for rec in cell.results.records:
                # warnings repeat per method; count each replicate once
                seen[(cell.sample_size, cell.m_biomarkers, cell.positive_rate, rec.replicate)] = rec.warnings
        return sum(seen.values())


def _run_cell(args):
    grid, cell = args
    study = cell_study_config(grid, *cell)
    try:
        results = run_study(study)
    except (StudyError, CalibrationError, CohortGenerationError) as exc:
        raise GridQualityError(cell, exc) from exc
    return CellResult(
        sample_size=cell[0],
        m_biomarkers=cell[1],
        positive_rate=cell[2],
        results=results,
    )


def run_grid(grid, jobs=1, progress=None):
    """Run every cell; results are identical for any ``jobs`` value."""
    tasks = [(grid, cell) for cell in grid.cells()]
    out = []
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, result in enumerate(pool.map(_run_cell, tasks)):
                out.append(result)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            out.append(_run_cell(task))
            if progress:
                progress(i + 1, len(tasks))
    return GridResults(config=grid, cells=tuple(out))
