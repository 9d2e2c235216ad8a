"""Study configuration parsing and CSV/manifest persistence.

All floats written to CSV are first rounded to 10 significant digits;
that rounding is applied to the in-memory records as well, so reading
``replicates.csv`` back and re-aggregating reproduces ``summary.csv``
byte for byte.  Output files carry the hash of the resolved configuration
that produced them (first line comment); timestamps appear only in the
manifest.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone

from . import metrics
from ._version import __version__
from .adjust import METHOD_ORDER
from .grid import GridResults, StudyGridConfig

__all__ = [
    "ConfigError",
    "CsvFormatError",
    "REPLICATE_COLUMNS",
    "SUMMARY_COLUMNS",
    "grid_config_dict",
    "manifest_dict",
    "manifest_hash",
    "parse_grid_config",
    "read_csv_rows",
    "replicate_rows",
    "round10",
    "summary_rows_from_replicates",
    "write_csv_rows",
]


class ConfigError(ValueError):
    """A study configuration document violates the schema."""


class CsvFormatError(ValueError):
    """A CSV input does not match the documented layout."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


REPLICATE_COLUMNS = (
    "method",
    "sample_size",
    "m_biomarkers",
    "positive_rate",
    "replicate",
    "n_significant",
    "sensitivity",
    "specificity",
    "power",
    "effective_alpha",
    "m2",
    "warnings",
)

SUMMARY_COLUMNS = (
    "method",
    "sample_size",
    "m_biomarkers",
    "positive_rate",
    "mean_sensitivity",
    "sd_sensitivity",
    "mean_specificity",
    "sd_specificity",
    "mean_power",
    "sd_power",
    "mean_effective_alpha",
    "mean_m2",
    "replicates_used",
    "warnings",
)

_GRID_FIELDS = {
    "sample_sizes": ("list_int", None),
    "biomarker_counts": ("list_int", None),
    "positive_rates": ("list_float", None),
    "alpha": ("float", 0.05),
    "bea_beta": ("float", 0.8),
    "baseline_power": ("float", 0.8),
    "replicates": ("int", 100),
    "generator_mode": ("str", "data-driven"),
    "label_probability": ("float", 0.99),
    "cap_policy": ("str", "cap-at-alpha"),
    "methods": ("list_str", tuple(METHOD_ORDER)),
    "master_seed": ("int", 0),
    "effect_size": ("float", 0.25),
    "prevalence": ("float", 0.5),
    "direct_p_shape": ("float", 0.15),
}


def _coerce(key, kind, value):
    try:
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return int(value)
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == "list_int":
            return tuple(_coerce(key, "int", v) for v in list(value))
        if kind == "list_float":
            return tuple(_coerce(key, "float", v) for v in list(value))
        if kind == "list_str":
            return tuple(_coerce(key, "str", v) for v in list(value))
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} has the wrong type") from None
    raise AssertionError(kind)


def parse_grid_config(document):
    """Validate a study-config mapping and build a :class:`StudyGridConfig`.

    Unknown keys are rejected by name; missing optional keys take their
    defaults.  ``sample_sizes``, ``biomarker_counts`` and
    ``positive_rates`` are required.
    """
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(document) - set(_GRID_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    kwargs = {}
    for key, (kind, default) in _GRID_FIELDS.items():
        if key in document:
            kwargs[key] = _coerce(key, kind, document[key])
        elif default is None:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            kwargs[key] = default
    try:
        return StudyGridConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def grid_config_dict(grid):
    """Resolved configuration as a plain JSON-ready mapping."""
    out = dataclasses.asdict(grid)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items()}


def manifest_hash(grid):
    """Stable hash of the resolved configuration and tool version."""
    canonical = json.dumps(
        {"config": grid_config_dict(grid), "tool": "mtcorrect", "version": __version__},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def manifest_dict(grid, *, started, finished, failed_replicates, warning_totals, outputs):
    return {
        "tool": "mtcorrect",
        "version": __version__,
        "config_hash": manifest_hash(grid),
        "master_seed": grid.master_seed,
        "started_utc": started,
        "finished_utc": finished,
        "failed_replicates": failed_replicates,
        "replicate_warnings": warning_totals,
        "outputs": list(outputs),
        "config": grid_config_dict(grid),
    }


def utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def round10(value):
    """Round a float to the 10 significant digits used in CSV output."""
    if value is None:
        return None
    return float(f"{float(value):.10g}")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, str)):
        return str(value)
    return f"{value:.10g}"


def replicate_rows(grid_results: GridResults):
    """Flatten grid results into replicates.csv rows (floats pre-rounded)."""
    rows = []
    for cell in grid_results.cells:
        rate = round10(cell.positive_rate)
        for rec in cell.results.records:
            rows.append(
                {
                    "method": rec.method,
                    "sample_size": cell.sample_size,
                    "m_biomarkers": cell.m_biomarkers,
                    "positive_rate": rate,
                    "replicate": rec.replicate,
                    "n_significant": rec.n_significant,
                    "sensitivity": round10(rec.sensitivity),
                    "specificity": round10(rec.specificity),
                    "power": round10(rec.power),
                    "effective_alpha": round10(rec.effective_alpha),
                    "m2": round10(rec.effective_tests),
                    "warnings": rec.warnings,
                }
            )
    return rows


def summary_rows_from_replicates(rep_rows):
    """Aggregate replicate rows into summary rows (one per method x cell).

    Cells appear in first-appearance order, methods likewise within each
    cell, so aggregating rows read back from disk reproduces the original
    summary exactly.
    """
    groups = {}
    order = []
    for row in rep_rows:
        key = (row["sample_size"], row["m_biomarkers"], row["positive_rate"], row["method"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        sample_size, m_biomarkers, positive_rate, method = key
        recs = [
            metrics.MethodRecord(
                method=method,
                replicate=row["replicate"],
                n_tests=m_biomarkers,
                n_significant=row["n_significant"],
                sensitivity=row["sensitivity"],
                specificity=row["specificity"],
                power=row["power"],
                effective_alpha=row["effective_alpha"],
                effective_tests=row["m2"],
                warnings=row["warnings"],
            )
            for row in groups[key]
        ]
        summary = metrics.aggregate(recs)[method]
        out.append(
            {
                "method": method,
                "sample_size": sample_size,
                "m_biomarkers": m_biomarkers,
                "positive_rate": positive_rate,
                "mean_sensitivity": round10(summary.mean_sensitivity),
                "sd_sensitivity": round10(summary.sd_sensitivity),
                "mean_specificity": round10(summary.mean_specificity),
                "sd_specificity": round10(summary.sd_specificity),
                "mean_power": round10(summary.mean_power),
                "sd_power": round10(summary.sd_power),
                "mean_effective_alpha": round10(summary.mean_effective_alpha),
                "mean_m2": round10(summary.mean_effective_tests),
                "replicates_used": summary.replicates_used,
                "warnings": summary.warnings,
            }
        )
    return out


def write_csv_rows(path, columns, rows, config_hash=None):
    """Write rows in the fixed column order, with an optional hash comment."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if config_hash is not None:
            handle.write(f"# manifest_hash={config_hash}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


_INT_COLUMNS = {
    "sample_size",
    "m_biomarkers",
    "replicate",
    "n_significant",
    "warnings",
    "replicates_used",
}


def read_csv_rows(path, columns):
    """Read rows written by :func:`write_csv_rows`, restoring types.

    Returns ``(rows, config_hash)``; the hash is ``None`` when the file
    carries no comment line.
    """
    with open(path, "r", newline="", encoding="utf-8") as handle:
        first = handle.readline()
        config_hash = None
        if first.startswith("# manifest_hash="):
            config_hash = first.strip().split("=", 1)[1]
            header_line = handle.readline()
        else:
            header_line = first
        header = next(csv.reader([header_line])) if header_line else []
        if tuple(header) != tuple(columns):
            raise CsvFormatError(
                f"expected header {','.join(columns)!r}, found {','.join(header)!r}",
                line=1,
            )
        rows = []
        for raw in csv.reader(handle):
            if not raw:
                continue
            if len(raw) != len(columns):
                raise CsvFormatError(
                    f"expected {len(columns)} fields, found {len(raw)}",
                    line=len(rows) + 2,
                )
            row = {}
            for col, text in zip(columns, raw):
                if text == "":
                    row[col] = None
                elif col in _INT_COLUMNS:
                    row[col] = int(text)
                elif col in ("method",):
                    row[col] = text
                else:
                    row[col] = float(text)
            rows.append(row)
    return rows, config_hash
