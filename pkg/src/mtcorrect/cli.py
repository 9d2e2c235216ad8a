"""Command-line interface.

Thin client over the library: ``adjust`` corrects a p-value CSV,
``simulate`` runs a configured study grid to CSV tables plus a manifest,
``report`` renders SVG charts from a summary table, and ``serve`` starts
the HTTP service.  Exit codes are stable: 0 success, 2 input or
configuration error, 3 simulation-quality failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from ._version import __version__
from .adjust import CAP_POLICIES, METHOD_ORDER, PValueBatch, apply_method
from .figures import X_AXES, Y_METRICS, FigureSpec, MissingCellError, build_chart
from .grid import GridQualityError, run_grid
from .studyio import (
    REPLICATE_COLUMNS,
    SUMMARY_COLUMNS,
    ConfigError,
    CsvFormatError,
    manifest_dict,
    manifest_hash,
    parse_grid_config,
    read_csv_rows,
    replicate_rows,
    summary_rows_from_replicates,
    utc_now,
    write_csv_rows,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_QUALITY = 3

ADJUST_COLUMNS = ("test_id", "p_value", "adjusted_p", "rejected", "method", "effective_alpha")


class InputError(Exception):
    """User-facing input problem; maps to exit code 2."""


def _fail(message):
    raise InputError(message)


def read_pvalue_csv(path):
    """Read a ``test_id,p_value`` CSV into a :class:`PValueBatch`."""
    try:
        handle = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc.strerror}")
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            _fail(f"{path}: empty file, expected header test_id,p_value")
        if [h.strip() for h in header] != ["test_id", "p_value"]:
            _fail(f"{path}: line 1: expected header test_id,p_value")
        ids = []
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                _fail(f"{path}: line {lineno}: expected 2 fields, found {len(row)}")
            test_id, text = row[0].strip(), row[1].strip()
            if not test_id:
                _fail(f"{path}: line {lineno}: empty test_id")
            try:
                value = float(text)
            except ValueError:
                _fail(f"{path}: line {lineno}: p_value {text!r} is not a number")
            if not 0.0 <= value <= 1.0:
                _fail(f"{path}: line {lineno}: p_value {value} outside [0, 1]")
            if test_id in set(ids):
                _fail(f"{path}: line {lineno}: duplicate test_id {test_id!r}")
            ids.append(test_id)
            values.append(value)
        if not ids:
            _fail(f"{path}: no tests found")
    return PValueBatch.from_values(values, ids)


def cmd_adjust(args):
    if args.method not in METHOD_ORDER:
        _fail(f"unknown method {args.method!r}; expected one of {', '.join(METHOD_ORDER)}")
    if not 0.0 < args.alpha < 1.0:
        _fail("alpha must lie strictly between 0 and 1")
    if not 0.0 <= args.beta < 1.0:
        _fail("beta must lie in [0, 1)")
    batch = read_pvalue_csv(args.input)
    outcome = apply_method(
        args.method, batch, args.alpha, beta=args.beta, cap_policy=args.cap
    )
    rows = []
    for i, test_id in enumerate(batch.test_ids):
        adjusted = None if outcome.adjusted_p is None else float(outcome.adjusted_p[i])
        rows.append(
            {
                "test_id": test_id,
                "p_value": float(batch.p_values[i]),
                "adjusted_p": adjusted,
                "rejected": bool(outcome.rejected[i]),
                "method": outcome.method,
                "effective_alpha": outcome.effective_alpha,
            }
        )
    write_csv_rows(args.out, ADJUST_COLUMNS, rows)
    if not args.quiet:
        print(
            f"{args.method}: rejected {outcome.n_rejected} of {len(batch)} tests "
            f"at effective alpha {outcome.effective_alpha:.6g} -> {args.out}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_simulate(args):
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        _fail(f"cannot read {args.config}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        _fail(f"{args.config}: invalid JSON: {exc}")
    try:
        grid = parse_grid_config(document)
    except ConfigError as exc:
        _fail(f"{args.config}: {exc}")

    env_seed = os.environ.get("MT_SEED")
    if env_seed is not None:
        try:
            grid = parse_grid_config({**document, "master_seed": int(env_seed)})
        except (ValueError, ConfigError):
            _fail(f"MT_SEED={env_seed!r} is not a valid integer seed")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = utc_now()

    def progress(done, total):
        if not args.quiet:
            print(f"cell {done}/{total} done", file=sys.stderr)

    results = run_grid(grid, jobs=args.jobs, progress=progress)
    finished = utc_now()

    config_hash = manifest_hash(grid)
    rep_rows = replicate_rows(results)
    sum_rows = summary_rows_from_replicates(rep_rows)
    write_csv_rows(out_dir / "replicates.csv", REPLICATE_COLUMNS, rep_rows, config_hash)
    write_csv_rows(out_dir / "summary.csv", SUMMARY_COLUMNS, sum_rows, config_hash)
    manifest = manifest_dict(
        grid,
        started=started,
        finished=finished,
        failed_replicates=results.failed_replicates,
        warning_totals=results.warning_totals,
        outputs=["replicates.csv", "summary.csv"],
    )
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=False)
        handle.write("\n")
    if not args.quiet:
        print(
            f"wrote {len(rep_rows)} replicate rows, {len(sum_rows)} summary rows "
            f"to {out_dir}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_report(args):
    try:
        rows, config_hash = read_csv_rows(args.summary, SUMMARY_COLUMNS)
    except OSError as exc:
        _fail(f"cannot read {args.summary}: {exc.strerror}")
    except CsvFormatError as exc:
        _fail(f"{args.summary}: {exc}")
    try:
        spec = FigureSpec(
            y_metric=args.y,
            x_axis=args.x,
            sample_size=args.sample_size,
            positive_rate=args.rate,
            m_biomarkers=args.m_biomarkers,
        )
        svg = build_chart(rows, spec)
    except MissingCellError as exc:
        _fail(str(exc))
    except ValueError as exc:
        _fail(str(exc))
    if config_hash:
        lines = svg.split("\n", 1)
        svg = lines[0] + f"\n<!-- manifest_hash={config_hash} -->\n" + lines[1]
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(svg)
    if not args.quiet:
        print(f"wrote chart to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mtcorrect",
        description="Multiple-testing correction toolkit and simulation harness",
    )
    parser.add_argument("--version", action="version", version=f"mtcorrect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_adjust = sub.add_parser("adjust", help="correct a test_id,p_value CSV")
    p_adjust.add_argument("input", help="input CSV with header test_id,p_value")
    p_adjust.add_argument("--method", required=True, help="|".join(METHOD_ORDER))
    p_adjust.add_argument("--alpha", type=float, default=0.05)
    p_adjust.add_argument("--beta", type=float, default=0.8, help="bea type-II parameter")
    p_adjust.add_argument("--cap", choices=CAP_POLICIES, default="cap-at-alpha")
    p_adjust.add_argument("--out", required=True, help="output CSV path")
    p_adjust.add_argument("--quiet", action="store_true")
    p_adjust.set_defaults(func=cmd_adjust)

    p_sim = sub.add_parser("simulate", help="run a study grid from a JSON config")
    p_sim.add_argument("--config", required=True, help="JSON study configuration")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    p_sim.add_argument("--quiet", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="render an SVG chart from summary.csv")
    p_rep.add_argument("summary", help="summary.csv from simulate")
    p_rep.add_argument("--y", required=True, choices=Y_METRICS)
    p_rep.add_argument("--x", required=True, choices=X_AXES)
    p_rep.add_argument("--sample-size", type=int, required=True, dest="sample_size")
    p_rep.add_argument("--rate", type=float, default=None, help="positive-rate filter")
    p_rep.add_argument(
        "--m-biomarkers", type=int, default=None, dest="m_biomarkers",
        help="biomarker-count filter",
    )
    p_rep.add_argument("--out", required=True, help="output SVG path")
    p_rep.add_argument("--quiet", action="store_true")
    p_rep.set_defaults(func=cmd_report)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GridQualityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUALITY


if __name__ == "__main__":
    sys.exit(main())
