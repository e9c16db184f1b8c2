"""Benchmark reporting and figure rendering.

The published per-stage table has three rows for the standard chain:
Beamforming, Envelope Detection (analytic signal + magnitude), and Dynamic
Adjustment.  Reports here group pipeline nodes into those rows by operator
kind and add a Total and FPS line per run; arbitrary graphs fall back to
one row per node.  Reports print as aligned text or JSON records and can be
written as CSV plus a rendered matplotlib figure.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import BenchmarkResult, PipelineGraph
from .types import BmodeImage

_ROW_FOR_KIND = {
    "beamform": "Beamforming",
    "analytic_signal": "Envelope Detection",
    "envelope": "Envelope Detection",
    "dynamic_adjustment": "Dynamic Adjustment",
}


def stage_rows(graph: PipelineGraph, result: BenchmarkResult) -> list[tuple[str, float]]:
    """Median ms/frame per display row, node kinds grouped Table-style.

    Per frame the grouped stages' wall times are summed first, then the
    median is taken across frames, so a row equals what a fused operator
    would have measured.
    """
    row_order: list[str] = []
    row_nodes: dict[str, list[str]] = {}
    for name in graph.order:
        label = _ROW_FOR_KIND.get(graph.node_kind(name), name)
        if label not in row_nodes:
            row_nodes[label] = []
            row_order.append(label)
        row_nodes[label].append(name)
    rows = []
    for label in row_order:
        samples = [
            sum(t.stage_ms(n) for n in row_nodes[label]) for t in result.per_frame
        ]
        rows.append((label, statistics.median(samples)))
    return rows


@dataclass
class BenchmarkReport:
    """One column per benchmark run, one row per (grouped) stage."""

    columns: list[str]  # e.g. "STAI [ms/frame]"
    row_labels: list[str]
    cells: list[list[float | None]]  # indexed [row][column]
    totals: list[float]
    fps: list[float]


def make_report(runs: list[tuple[str, PipelineGraph, BenchmarkResult]]) -> BenchmarkReport:
    """Combine benchmark runs into one table; FPS is 1000 / total ms."""
    row_labels: list[str] = []
    for _, graph, result in runs:
        for label, _ in stage_rows(graph, result):
            if label not in row_labels:
                row_labels.append(label)
    columns, totals, fps = [], [], []
    cells: list[list[float | None]] = [[None] * len(runs) for _ in row_labels]
    for j, (mode, graph, result) in enumerate(runs):
        columns.append(f"{mode} [ms/frame]")
        for label, ms in stage_rows(graph, result):
            cells[row_labels.index(label)][j] = ms
        total = result.timing.total_ms
        totals.append(total)
        fps.append(1000.0 / total)
    return BenchmarkReport(
        columns=columns, row_labels=row_labels, cells=cells, totals=totals, fps=fps
    )


def format_table(report: BenchmarkReport) -> str:
    """Aligned text table with Total and FPS lines."""
    label_w = max(
        len(s) for s in report.row_labels + ["Step", "Total [ms/frame]", "FPS"]
    )
    col_w = [max(len(c), 12) for c in report.columns]

    def fmt_row(label, values, fmt="{:.3f}"):
        cells = [
            (fmt.format(v) if v is not None else "-").rjust(w)
            for v, w in zip(values, col_w)
        ]
        return label.ljust(label_w) + "  " + "  ".join(cells)

    lines = [fmt_row("Step", report.columns, "{}")]
    lines[0] = "Step".ljust(label_w) + "  " + "  ".join(
        c.rjust(w) for c, w in zip(report.columns, col_w)
    )
    lines.append("-" * len(lines[0]))
    for label, row in zip(report.row_labels, report.cells):
        lines.append(fmt_row(label, row))
    lines.append("-" * len(lines[0]))
    lines.append(fmt_row("Total [ms/frame]", report.totals))
    lines.append(fmt_row("FPS", report.fps, "{:.2f}"))
    return "\n".join(lines)


def report_records(report: BenchmarkReport) -> list[dict]:
    """Flat machine-readable records, one per table cell."""
    records = []
    for j, column in enumerate(report.columns):
        mode = column.split(" ")[0]
        for label, row in zip(report.row_labels, report.cells):
            if row[j] is not None:
                records.append(
                    {"mode": mode, "step": label, "ms_per_frame": row[j]}
                )
        records.append(
            {"mode": mode, "step": "Total", "ms_per_frame": report.totals[j]}
        )
        records.append({"mode": mode, "step": "FPS", "value": report.fps[j]})
    return records


def format_records(report: BenchmarkReport) -> str:
    return "\n".join(json.dumps(r) for r in report_records(report))


def write_csv(report: BenchmarkReport, path) -> None:
    """Delimited form of the table: step column plus one column per run."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + report.columns)
        for label, row in zip(report.row_labels, report.cells):
            writer.writerow([label] + ["" if v is None else repr(v) for v in row])
        writer.writerow(["Total [ms/frame]"] + [repr(v) for v in report.totals])
        writer.writerow(["FPS"] + [repr(v) for v in report.fps])


def save_timing_figure(report: BenchmarkReport, path) -> None:
    """Horizontal grouped bar chart of per-stage ms/frame."""
    labels = report.row_labels
    n_rows = len(labels)
    n_cols = len(report.columns)
    fig, ax = plt.subplots(figsize=(7.0, 1.2 + 0.7 * n_rows))
    y = np.arange(n_rows)
    height = 0.8 / max(n_cols, 1)
    for j, column in enumerate(report.columns):
        vals = [report.cells[i][j] or 0.0 for i in range(n_rows)]
        ax.barh(y + (j - (n_cols - 1) / 2) * height, vals, height=height,
                label=column)
    ax.set_yticks(y)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("ms per frame (median)")
    ax.set_title("Pipeline stage timing")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bmode_figure(img: BmodeImage, path, title: str | None = None) -> None:
    """Grayscale rendering of a display-stage image with mm axes."""
    extent = [
        img.grid.x_positions[0] * 1e3,
        img.grid.x_positions[-1] * 1e3,
        img.grid.z_positions[-1] * 1e3,
        img.grid.z_positions[0] * 1e3,
    ]
    fig, ax = plt.subplots(figsize=(5.0, 6.0))
    ax.imshow(img.data, cmap="gray", vmin=0.0, vmax=1.0, extent=extent,
              aspect="auto")
    ax.set_xlabel("lateral [mm]")
    ax.set_ylabel("depth [mm]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
