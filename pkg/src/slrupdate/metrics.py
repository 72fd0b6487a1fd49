"""Confusion counts, precision/recall/F-measure, workload reduction, reports.

Zero denominators give 0 rather than raising: an aggressive threshold can flag
nothing, and a batch evaluation must still produce its report.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .errors import IoFailure, LengthMismatch, MalformedCsv, ZeroFlagged

REPORT_COLUMNS = (
    "model", "tp", "fp", "fn", "tn", "precision", "recall", "f_measure", "workload_reduction",
)


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f_measure: float
    n_total: int
    n_flagged: int
    workload_reduction: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "EvalReport":
        p, r, f = precision_recall_f(tp, fp, fn)
        n = tp + fp + fn + tn
        flagged = tp + fp
        wr = workload_reduction(flagged, n) if flagged else float("inf")
        return cls(tp, fp, fn, tn, p, r, f, n, flagged, wr)


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) for 0/1 predictions against 0/1 labels."""
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    tp = fp = fn = tn = 0
    for p, y in zip(predictions, labels):
        if y not in (0, 1) or p not in (0, 1):
            raise ValueError("predictions and labels must be 0 or 1")
        if p and y:
            tp += 1
        elif p:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def precision_recall_f(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, f_measure(precision, recall)


def workload_reduction(n_flagged: int, n_total: int, exact: bool = False) -> float | Fraction:
    """How many times fewer studies a reviewer reads: ``n_total / n_flagged``."""
    if n_flagged <= 0:
        raise ZeroFlagged("no study was flagged for screening")
    if n_flagged > n_total:
        raise ValueError("n_flagged cannot exceed n_total")
    ratio = Fraction(n_total, n_flagged)
    return ratio if exact else float(ratio)


def evaluate(predictions: Sequence[int], labels: Sequence[int]) -> EvalReport:
    return EvalReport.from_counts(*confusion(predictions, labels))


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------


def report_csv(reports: Mapping[str, EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(REPORT_COLUMNS)
    for name, r in reports.items():
        w.writerow([name, r.tp, r.fp, r.fn, r.tn, f"{r.precision:.6f}", f"{r.recall:.6f}",
                    f"{r.f_measure:.6f}", f"{r.workload_reduction:.6f}"])
    return buf.getvalue()


def read_report_csv(source: str | Path) -> dict[str, dict[str, float]]:
    with open(source, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != REPORT_COLUMNS:
            raise MalformedCsv(1, "unexpected report header")
        out = {}
        for row in reader:
            if len(row) != len(REPORT_COLUMNS):
                raise MalformedCsv(reader.line_num, "wrong column count")
            vals = dict(zip(REPORT_COLUMNS[1:], row[1:]))
            out[row[0]] = {k: (int(v) if k in ("tp", "fp", "fn", "tn") else float(v)) for k, v in vals.items()}
        return out


_BAR_COLORS = {"precision": "#4c72b0", "recall": "#dd8452", "f_measure": "#55a868"}
_BAR_LABELS = {"precision": "Precision", "recall": "Recall", "f_measure": "F-measure"}


def report_svg(reports: Mapping[str, EvalReport], title: str = "Model performance (class 1)") -> str:
    """Grouped bar chart: precision, recall and F-measure per model."""
    metrics = ("precision", "recall", "f_measure")
    bar_w, gap, group_gap = 28, 4, 36
    group_w = len(metrics) * bar_w + (len(metrics) - 1) * gap
    left, top, plot_h, bottom = 60, 50, 260, 60
    width = left + len(reports) * (group_w + group_gap) + group_gap + 140
    height = top + plot_h + bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    for i in range(6):
        frac = i / 5
        y = top + plot_h * (1 - frac)
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{width - 140}" y2="{y:.1f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{frac:.1f}</text>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#333333"/>')
    out.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{width - 140}" y2="{top + plot_h}" stroke="#333333"/>')
    for gi, (name, r) in enumerate(reports.items()):
        x0 = left + group_gap + gi * (group_w + group_gap)
        for mi, m in enumerate(metrics):
            v = min(max(getattr(r, m), 0.0), 1.0)
            h = plot_h * v
            x = x0 + mi * (bar_w + gap)
            y = top + plot_h - h
            out.append(
                f'<rect class="bar" data-model="{escape(name)}" data-metric="{m}" x="{x}" y="{y:.2f}" '
                f'width="{bar_w}" height="{h:.2f}" fill="{_BAR_COLORS[m]}"/>'
            )
            out.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{y - 3:.2f}" text-anchor="middle" font-size="9">'
                f'{100 * v:.1f}%</text>'
            )
        out.append(
            f'<text x="{x0 + group_w / 2:.1f}" y="{top + plot_h + 18}" text-anchor="middle">{escape(name)}</text>'
        )
    lx = width - 125
    for li, m in enumerate(metrics):
        ly = top + 10 + li * 20
        out.append(f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{_BAR_COLORS[m]}"/>')
        out.append(f'<text x="{lx + 18}" y="{ly + 10}">{_BAR_LABELS[m]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(reports: Mapping[str, EvalReport], destination: str | Path) -> tuple[Path, Path]:
    """Write ``report.csv`` and ``report.svg`` into ``destination``."""
    if not reports:
        raise ValueError("at least one report is required")
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
        csv_path, svg_path = dest / "report.csv", dest / "report.svg"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report_csv(reports))
        svg_path.write_text(report_svg(reports), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return csv_path, svg_path
