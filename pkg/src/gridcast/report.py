"""Report rendering and persistence: JSON document, table CSVs shaped
like the price/demand accuracy and error-summary tables, per-sample
error CSVs, markdown re-rendering, and standalone SVG line charts.

All file output is UTF-8 with LF newlines; numeric cells use Python's
shortest round-trip float repr so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .errors import DataError
from .harness import MODEL_ORDER, TARGETS, BenchmarkReport

__all__ = ["write_report", "load_report", "render_summary_csv",
           "render_accuracy_csv", "render_markdown", "render_error_csv",
           "svg_line_chart"]

ACCURACY_ROWS = (("±5%", "accuracy_within_5"), ("±10%", "accuracy_within_10"))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _ordered_cells(cells: dict):
    for kind in MODEL_ORDER:
        for target in TARGETS:
            key = f"{kind}_{target}"
            if key in cells:
                yield key, cells[key]


def render_accuracy_csv(cells: dict, target: str) -> str:
    """Rows ±5% / ±10%, one column per model (accuracy table layout)."""
    models = [m for m in MODEL_ORDER if f"{m}_{target}" in cells]
    lines = ["accuracy," + ",".join(models)]
    for label, field in ACCURACY_ROWS:
        row = [label]
        for m in models:
            cell = cells[f"{m}_{target}"]
            row.append(_fmt(cell.get(field)))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_summary_csv(cells: dict) -> str:
    """One row per (model, target) with MSE/MAE/R^2/MAPE (summary layout)."""
    lines = ["model,target,mse,mae,r2,mape,n_excluded"]
    for _key, cell in _ordered_cells(cells):
        lines.append(",".join([
            cell["model"], cell["target"],
            _fmt(cell.get("mse")), _fmt(cell.get("mae")),
            _fmt(cell.get("r2")), _fmt(cell.get("mape")),
            _fmt(cell.get("n_excluded")),
        ]))
    return "\n".join(lines) + "\n"


def render_error_csv(series: dict) -> str:
    lines = ["timestamp,actual,predicted,error,relative_error"]
    for i, ts in enumerate(series["timestamps"]):
        rel = series["relative_error"][i]
        lines.append(",".join([
            ts.isoformat() if hasattr(ts, "isoformat") else str(ts),
            repr(float(series["actual"][i])),
            repr(float(series["predicted"][i])),
            repr(float(series["error"][i])),
            "excluded" if math.isnan(rel) else repr(float(rel)),
        ]))
    return "\n".join(lines) + "\n"


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    out = ["| " + " | ".join(header) + " |",
           "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        out.append("| " + " | ".join(row) + " |")
    return "\n".join(out)


def render_markdown(report: dict) -> str:
    """Human-readable re-render: two accuracy tables and the error summary."""
    cells = report["cells"]
    parts = []
    for target in TARGETS:
        models = [m for m in MODEL_ORDER if f"{m}_{target}" in cells]
        if not models:
            continue
        parts.append(f"## {target.capitalize()} accuracy")
        rows = []
        for label, field in ACCURACY_ROWS:
            row = [label]
            for m in models:
                v = cells[f"{m}_{target}"].get(field)
                row.append("n/a" if v is None else f"{v:.2f}%")
            rows.append(row)
        parts.append(_md_table(["Accuracy"] + models, rows))
    parts.append("## Error summary")
    rows = []
    for _key, cell in _ordered_cells(cells):
        if "error" in cell:
            rows.append([cell["model"], cell["target"], "failed: " + cell["error"],
                         "", "", ""])
            continue
        rows.append([
            cell["model"], cell["target"],
            f"{cell['mse']:.2f}", f"{cell['mae']:.2f}",
            f"{cell['r2']:.4f}", f"{cell['mape']:.1f}%",
        ])
    parts.append(_md_table(["Model", "Data", "MSE", "MAE", "R2", "MAPE"], rows))
    return "\n\n".join(parts) + "\n"


def svg_line_chart(series_list, title: str, width=900, height=300) -> str:
    """Standalone SVG with one polyline per (label, values) pair."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    margin = 45
    all_vals = np.concatenate([np.asarray(v, dtype=np.float64) for _, v in series_list])
    finite = all_vals[np.isfinite(all_vals)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    if hi == lo:
        hi = lo + 1.0
    n = max(len(v) for _, v in series_list)

    def sx(i):
        return margin + (width - 2 * margin) * (i / max(1, n - 1))

    def sy(v):
        return height - margin - (height - 2 * margin) * ((v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="#333"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="#333"/>',
        f'<text x="8" y="{margin}" font-family="sans-serif" font-size="11">{hi:.4g}</text>',
        f'<text x="8" y="{height - margin}" font-family="sans-serif" '
        f'font-size="11">{lo:.4g}</text>',
    ]
    for k, (label, values) in enumerate(series_list):
        pts = " ".join(
            f"{sx(i):.2f},{sy(v):.2f}"
            for i, v in enumerate(values)
            if np.isfinite(v)
        )
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" '
                     f'points="{pts}"/>')
        parts.append(f'<text x="{margin + 6 + 130 * k}" y="{margin - 8}" '
                     f'font-family="sans-serif" font-size="12" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_report(report: BenchmarkReport, out_dir) -> dict:
    """Persist report artifacts; returns a name -> path map.

    Timings go to their own file so report.json and the CSVs are
    byte-identical across reruns of the same config and seed.
    """
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "config": report.config,
        "dataset": report.dataset,
        "cells": report.cells,
    }
    paths = {}

    def emit(name, text):
        path = os.path.join(out_dir, name)
        _write(path, text)
        paths[name] = path

    emit("report.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
    emit("timings.json",
         json.dumps({k: round(v, 6) for k, v in sorted(report.timings.items())},
                    sort_keys=True, indent=2) + "\n")
    for target in TARGETS:
        if any(f"{m}_{target}" in report.cells for m in MODEL_ORDER):
            emit(f"accuracy_{target}.csv", render_accuracy_csv(report.cells, target))
    emit("summary.csv", render_summary_csv(report.cells))
    for key, series in report.series.items():
        emit(report.cells[key]["error_file"], render_error_csv(series))
    return paths


def load_report(run_dir) -> dict:
    """Load a stored report document (cells and config)."""
    path = os.path.join(run_dir, "report.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open run directory report: {exc}") from None
    except json.JSONDecodeError:
        raise DataError(f"corrupt report document: {path}") from None


def load_error_series(run_dir, error_file: str) -> dict:
    path = os.path.join(run_dir, error_file)
    timestamps, actual, predicted, error, rel = [], [], [], [], []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                ts, a, p, e, r = line.rstrip("\n").split(",")
                timestamps.append(ts)
                actual.append(float(a))
                predicted.append(float(p))
                error.append(float(e))
                rel.append(math.nan if r == "excluded" else float(r))
    except OSError as exc:
        raise DataError(f"cannot open error series: {exc}") from None
    return {
        "timestamps": timestamps,
        "actual": np.array(actual),
        "predicted": np.array(predicted),
        "error": np.array(error),
        "relative_error": np.array(rel),
    }
