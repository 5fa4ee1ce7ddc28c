"""Analysis-run summaries: text table, CSV, path listing, and figures.

The text table carries wall-clock runtimes and is therefore not reproducible
byte-for-byte across runs; the CSV holds only the model-determined columns and
is the stable artifact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .engine import Counterexample

_HEADER = ("T", "probability", "#paths", "#classes", "transient_s", "collect_s", "classify_s")


@dataclass(frozen=True)
class AnalysisRow:
    """One mission time's results; the *_seconds fields are phase runtimes."""

    time_bound: float
    probability: float
    path_count: int
    class_count: int
    transient_seconds: float
    collect_seconds: float
    classify_seconds: float


def _cells(row: AnalysisRow) -> tuple[str, ...]:
    return (
        f"{row.time_bound:g}",
        f"{row.probability:.6e}",
        str(row.path_count),
        str(row.class_count),
        f"{row.transient_seconds:.3f}",
        f"{row.collect_seconds:.3f}",
        f"{row.classify_seconds:.3f}",
    )


def render_table(rows: Sequence[AnalysisRow]) -> str:
    """Aligned plain-text table, one line per mission time."""
    lines = [_HEADER] + [_cells(row) for row in rows]
    widths = [max(len(line[i]) for line in lines) for i in range(len(_HEADER))]
    return "\n".join(
        "  ".join(cell.rjust(width) for cell, width in zip(line, widths)) for line in lines
    ) + "\n"


def render_csv(rows: Sequence[AnalysisRow]) -> str:
    """Deterministic subset of the table (runtimes omitted)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["T", "probability", "paths", "classes"])
    for row in rows:
        writer.writerow(
            [f"{row.time_bound:g}", f"{row.probability:.6e}", row.path_count, row.class_count]
        )
    return buf.getvalue()


def render_counterexample(cx: Counterexample, target: str) -> str:
    """Collected paths, highest probability bound first."""
    out = [
        f"counterexample for {target} at T={cx.time_bound:g}",
        f"transient={cx.transient:.6e}  total_mass={cx.total_mass:.6e}  "
        f"paths={len(cx.paths)}  stopped_by={cx.stopped_by}",
        "",
    ]
    for i, path in enumerate(cx.paths, start=1):
        out.append(f"{i}. {path.bound:.6e}  {' -> '.join(path.labels)}")
    return "\n".join(out) + "\n"


def render_figures(rows: Sequence[AnalysisRow], outdir) -> list[Path]:
    """Probability-vs-T curve and per-T path/class counts as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    times = [row.time_bound for row in rows]
    probabilities = [row.probability for row in rows]
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(times, probabilities, marker="o")
    ax.set_xlabel("mission time T")
    ax.set_ylabel("probability")
    if all(p > 0 for p in probabilities):
        ax.set_yscale("log")
    if len(set(times)) > 1 and all(t > 0 for t in times):
        ax.set_xscale("log")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    target = outdir / "report_probability.png"
    fig.savefig(target, dpi=100)
    plt.close(fig)
    written.append(target)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positions = range(len(rows))
    width = 0.4
    ax.bar([i - width / 2 for i in positions], [row.path_count for row in rows],
           width, label="paths")
    ax.bar([i + width / 2 for i in positions], [row.class_count for row in rows],
           width, label="classes")
    ax.set_xticks(list(positions), [f"{t:g}" for t in times])
    ax.set_xlabel("mission time T")
    ax.set_ylabel("count")
    if all(row.path_count > 0 and row.class_count > 0 for row in rows):
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    target = outdir / "report_classes.png"
    fig.savefig(target, dpi=100)
    plt.close(fig)
    written.append(target)
    return written
