"""HTTP service exposing the correction toolkit.

Endpoints mirror the CLI: ``POST /v1/adjust`` corrects a batch of
p-values, ``POST /v1/simulate`` runs a (size-limited) study grid and
returns summary rows, ``POST /v1/report`` renders an SVG chart from
summary rows.  The CLI remains the tool of choice for long grids; the
service guards itself with a work-budget check.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, ConfigDict, Field

from ._version import __version__
from .adjust import PValueBatch, apply_method
from .figures import FigureSpec, MissingCellError, build_chart
from .grid import GridQualityError, run_grid
from .studyio import (
    ConfigError,
    manifest_hash,
    parse_grid_config,
    replicate_rows,
    summary_rows_from_replicates,
)

# Rough per-request budget: replicates x patients x biomarkers summed over
# cells.  The full reference grid belongs in the CLI, not an HTTP call.
MAX_SIMULATION_WORK = 2_000_000_000

app = FastAPI(
    title="mtcorrect",
    version=__version__,
    description="Multiple-testing correction as a service",
)

MethodName = Literal["bonferroni", "holm", "bh", "bea"]
CapPolicy = Literal["cap-at-alpha", "uncapped"]


class TestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    test_id: str = Field(min_length=1)
    p_value: float = Field(ge=0.0, le=1.0)


class AdjustRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tests: list[TestEntry] = Field(min_length=1)
    method: MethodName
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    beta: float = Field(default=0.8, ge=0.0, lt=1.0)
    cap_policy: CapPolicy = "cap-at-alpha"


class AdjustedTest(BaseModel):
    test_id: str
    p_value: float
    adjusted_p: Optional[float]
    rejected: bool


class BeaInfo(BaseModel):
    total_tests: int
    significant_count: int
    significant_fraction: float
    proportional_tests: float
    beta: float
    exponent: float
    effective_tests: float
    threshold_uncapped: Optional[float]
    threshold_applied: float
    cap_engaged: bool


class AdjustResponse(BaseModel):
    method: MethodName
    alpha: float
    effective_alpha: float
    n_tests: int
    n_rejected: int
    results: list[AdjustedTest]
    bea: Optional[BeaInfo] = None


@app.get("/v1/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/v1/adjust", response_model=AdjustResponse)
def adjust(request: AdjustRequest):
    ids = [t.test_id for t in request.tests]
    if len(set(ids)) != len(ids):
        raise HTTPException(status_code=422, detail="test_id values must be unique")
    batch = PValueBatch.from_values([t.p_value for t in request.tests], ids)
    outcome = apply_method(
        request.method,
        batch,
        request.alpha,
        beta=request.beta,
        cap_policy=request.cap_policy,
    )
    results = [
        AdjustedTest(
            test_id=test_id,
            p_value=float(batch.p_values[i]),
            adjusted_p=None if outcome.adjusted_p is None else float(outcome.adjusted_p[i]),
            rejected=bool(outcome.rejected[i]),
        )
        for i, test_id in enumerate(batch.test_ids)
    ]
    bea_info = None
    if outcome.diagnostics is not None:
        diag = outcome.diagnostics
        bea_info = BeaInfo(
            total_tests=diag.total_tests,
            significant_count=diag.significant_count,
            significant_fraction=diag.significant_fraction,
            proportional_tests=diag.proportional_tests,
            beta=diag.beta,
            exponent=diag.exponent,
            effective_tests=diag.effective_tests,
            threshold_uncapped=(
                None if diag.threshold_uncapped == float("inf") else diag.threshold_uncapped
            ),
            threshold_applied=diag.threshold_applied,
            cap_engaged=diag.cap_engaged,
        )
    return AdjustResponse(
        method=request.method,
        alpha=request.alpha,
        effective_alpha=outcome.effective_alpha,
        n_tests=len(batch),
        n_rejected=outcome.n_rejected,
        results=results,
        bea=bea_info,
    )


class SimulateRequest(BaseModel):
    """Same document the CLI accepts as --config."""

    model_config = ConfigDict(extra="forbid")

    sample_sizes: list[int] = Field(min_length=1)
    biomarker_counts: list[int] = Field(min_length=1)
    positive_rates: list[float] = Field(min_length=1)
    alpha: float = 0.05
    bea_beta: float = 0.8
    baseline_power: float = 0.8
    replicates: int = Field(default=100, ge=1)
    generator_mode: Literal["data-driven", "direct-p"] = "data-driven"
    label_probability: float = 0.99
    cap_policy: CapPolicy = "cap-at-alpha"
    methods: list[MethodName] = ["bonferroni", "holm", "bh", "bea"]
    master_seed: int = 0
    effect_size: float = 0.25
    prevalence: float = 0.5
    direct_p_shape: float = 0.15


class SummaryRow(BaseModel):
    method: str
    sample_size: int
    m_biomarkers: int
    positive_rate: float
    mean_sensitivity: Optional[float]
    sd_sensitivity: Optional[float]
    mean_specificity: Optional[float]
    sd_specificity: Optional[float]
    mean_power: Optional[float]
    sd_power: Optional[float]
    mean_effective_alpha: Optional[float]
    mean_m2: Optional[float]
    replicates_used: int
    warnings: int


class SimulateResponse(BaseModel):
    config_hash: str
    failed_replicates: int
    warning_totals: int
    summary: list[SummaryRow]


@app.post("/v1/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest):
    try:
        grid = parse_grid_config(request.model_dump())
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    work = (
        sum(grid.sample_sizes)
        * sum(grid.biomarker_counts)
        * len(grid.positive_rates)
        * grid.replicates
    )
    if work > MAX_SIMULATION_WORK:
        raise HTTPException(
            status_code=413,
            detail="study too large for the service; run it through the CLI",
        )
    try:
        results = run_grid(grid)
    except GridQualityError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    rows = summary_rows_from_replicates(replicate_rows(results))
    return SimulateResponse(
        config_hash=manifest_hash(grid),
        failed_replicates=results.failed_replicates,
        warning_totals=results.warning_totals,
        summary=[SummaryRow(**row) for row in rows],
    )


class ReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    summary: list[SummaryRow] = Field(min_length=1)
    y_metric: Literal["sensitivity", "specificity", "power"]
    x_axis: Literal["m_biomarkers", "positive_rate"]
    sample_size: int
    positive_rate: Optional[float] = None
    m_biomarkers: Optional[int] = None


@app.post("/v1/report")
def report(request: ReportRequest):
    try:
        spec = FigureSpec(
            y_metric=request.y_metric,
            x_axis=request.x_axis,
            sample_size=request.sample_size,
            positive_rate=request.positive_rate,
            m_biomarkers=request.m_biomarkers,
        )
        svg = build_chart([row.model_dump() for row in request.summary], spec)
    except (MissingCellError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return Response(content=svg, media_type="image/svg+xml")
