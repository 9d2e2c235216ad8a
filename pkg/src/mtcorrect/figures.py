"""Static SVG line charts over study summaries.

Charts are written by hand rather than through a plotting library so the
output is byte-deterministic: fixed canvas, fixed legend order, and every
marker carries the exact summary value it represents in ``data-x``/
``data-y`` attributes.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from .adjust import METHOD_ORDER

__all__ = ["FigureSpec", "MissingCellError", "X_AXES", "Y_METRICS", "build_chart"]

Y_METRICS = ("sensitivity", "specificity", "power")
X_AXES = ("m_biomarkers", "positive_rate")

_COLORS = {
    "bonferroni": "#1f77b4",
    "holm": "#ff7f0e",
    "bh": "#2ca02c",
    "bea": "#d62728",
}

_WIDTH, _HEIGHT = 720, 480
_MARGIN_LEFT, _MARGIN_RIGHT = 80, 150
_MARGIN_TOP, _MARGIN_BOTTOM = 40, 60


class MissingCellError(ValueError):
    """The summary lacks cells the figure spec asks for."""

    def __init__(self, missing):
        self.missing = list(missing)
        cells = "; ".join(str(c) for c in self.missing)
        super().__init__(f"summary is missing cells: {cells}")


@dataclass(frozen=True)
class FigureSpec:
    """What to plot: one metric against one grid axis, other axes fixed."""

    y_metric: str
    x_axis: str
    sample_size: int
    positive_rate: float | None = None
    m_biomarkers: int | None = None

    def __post_init__(self):
        if self.y_metric not in Y_METRICS:
            raise ValueError(f"y_metric must be one of {Y_METRICS}")
        if self.x_axis not in X_AXES:
            raise ValueError(f"x_axis must be one of {X_AXES}")
        if self.x_axis == "m_biomarkers" and self.positive_rate is None:
            raise ValueError("positive_rate filter required when x is m_biomarkers")
        if self.x_axis == "positive_rate" and self.m_biomarkers is None:
            raise ValueError("m_biomarkers filter required when x is positive_rate")


def _matches(row, spec):
    if row["sample_size"] != spec.sample_size:
        return False
    if spec.x_axis == "m_biomarkers":
        return row["positive_rate"] == spec.positive_rate
    return row["m_biomarkers"] == spec.m_biomarkers


def _fmt(value):
    return f"{value:.10g}"


def _data(value):
    # repr round-trips any float exactly; data attributes must carry the
    # plotted value verbatim
    return repr(float(value))


def build_chart(summary_rows, spec):
    """Render one figure from summary rows; returns the SVG text.

    Every (method, x) pair implied by the spec must be present in the
    summary with a defined mean, otherwise :class:`MissingCellError`
    lists what is missing.
    """
    matching = [r for r in summary_rows if _matches(r, spec)]
    methods = [m for m in METHOD_ORDER if any(r["method"] == m for r in summary_rows)]
    x_values = sorted({r[spec.x_axis] for r in matching})
    if not x_values or not methods:
        raise MissingCellError([f"no cells for {spec}"])

    column = f"mean_{spec.y_metric}"
    series = {}
    missing = []
    for method in methods:
        points = []
        for x in x_values:
            row = next(
                (r for r in matching if r["method"] == method and r[spec.x_axis] == x),
                None,
            )
            if row is None or row.get(column) is None:
                missing.append((method, spec.x_axis, x))
            else:
                points.append((x, row[column]))
        series[method] = points
    if missing:
        raise MissingCellError(missing)

    x_min, x_max = min(x_values), max(x_values)
    span = (x_max - x_min) or 1.0
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x):
        if len(x_values) == 1:
            return _MARGIN_LEFT + plot_w / 2.0
        return _MARGIN_LEFT + (x - x_min) / span * plot_w

    def sy(y):
        return _MARGIN_TOP + (1.0 - y) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]

    if spec.x_axis == "m_biomarkers":
        subtitle = f"sample size {spec.sample_size}, positive rate {_fmt(spec.positive_rate)}"
        x_label = "number of biomarkers"
    else:
        subtitle = f"sample size {spec.sample_size}, biomarkers {spec.m_biomarkers}"
        x_label = "raw positive rate"
    title = f"{spec.y_metric} by {x_label} ({subtitle})"
    parts.append(
        f'<text x="{_WIDTH / 2:.6g}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{escape(title)}</text>'
    )

    # frame and y grid at 0, 0.25, ..., 1
    parts.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    for i in range(5):
        y = i / 4.0
        py = sy(y)
        parts.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{py:.6g}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{py:.6g}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{py + 4:.6g}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{_fmt(y)}</text>'
        )
    for x in x_values:
        px = sx(x)
        parts.append(
            f'<line x1="{px:.6g}" y1="{_MARGIN_TOP + plot_h}" x2="{px:.6g}" '
            f'y2="{_MARGIN_TOP + plot_h + 5}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.6g}" y="{_MARGIN_TOP + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_fmt(x)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.6g}" y="{_HEIGHT - 16}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="20" y="{_MARGIN_TOP + plot_h / 2:.6g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {_MARGIN_TOP + plot_h / 2:.6g})">'
        f"{escape(spec.y_metric)}</text>"
    )

    for method in methods:
        color = _COLORS[method]
        points = series[method]
        coords = " ".join(f"{sx(x):.6g},{sy(y):.6g}" for x, y in points)
        if len(points) > 1:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="2" class="series-{method}"/>'
            )
        for x, y in points:
            parts.append(
                f'<circle cx="{sx(x):.6g}" cy="{sy(y):.6g}" r="4" fill="{color}" '
                f'class="series-{method}" data-method="{method}" '
                f'data-x="{_data(x)}" data-y="{_data(y)}"/>'
            )

    lx = _MARGIN_LEFT + plot_w + 16
    for i, method in enumerate(methods):
        ly = _MARGIN_TOP + 12 + i * 22
        parts.append(
            f'<rect x="{lx}" y="{ly - 9}" width="14" height="14" fill="{_COLORS[method]}"/>'
        )
        parts.append(
            f'<text x="{lx + 20}" y="{ly + 3}" font-family="sans-serif" '
            f'font-size="13">{escape(method)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
