"""Standard classification metrics plus the uncertainty confusion-matrix suite.

Precision/recall/F1 are support-weighted averages of per-class values with
0/0 defined as 0; under that weighting recall is algebraically identical to
accuracy. The uncertainty side partitions predictions into the four
correct/incorrect x certain/uncertain cells and derives UAcc, USen, USpe and
UPre from the cell counts. Reported percentages round half-up to two
decimals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import ClassVocabulary
from .uq import PredictionRecord, flag_certainty


@dataclass(frozen=True)
class StandardMetrics:
    acc: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class UncertaintyCounts:
    """Cell counts of the uncertainty confusion matrix."""

    cc: int  # correct & certain
    ic: int  # incorrect & certain
    cu: int  # correct & uncertain
    iu: int  # incorrect & uncertain

    def __post_init__(self) -> None:
        if min(self.cc, self.ic, self.cu, self.iu) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.cc + self.ic + self.cu + self.iu

    def scaled(self, factor: int) -> "UncertaintyCounts":
        return UncertaintyCounts(
            self.cc * factor, self.ic * factor, self.cu * factor, self.iu * factor
        )


@dataclass(frozen=True)
class UncertaintyMetrics:
    uacc: float
    usen: float
    uspe: float
    upre: float
    degenerate: tuple[str, ...] = ()  # metrics whose denominator was 0


@dataclass(frozen=True)
class MetricReport:
    """One evaluated (prediction set, certainty threshold) combination."""

    threshold: float
    acc: float
    precision: float
    recall: float
    f1: float
    counts: UncertaintyCounts
    uacc: float
    usen: float
    uspe: float
    upre: float
    degenerate: tuple[str, ...] = ()


def standard_metrics(
    predicted: Sequence[int], true_labels: Sequence[int], vocab: ClassVocabulary
) -> StandardMetrics:
    """Accuracy plus support-weighted precision/recall/F1 over the vocabulary."""
    pred = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true_labels, dtype=np.int64)
    if pred.shape != true.shape or pred.size == 0:
        raise ValueError("predicted and true_labels must be equal-length and nonempty")
    n = pred.size
    acc = float(np.mean(pred == true))
    precision = recall = f1 = 0.0
    for c in range(vocab.count):
        support = int(np.sum(true == c))
        if support == 0:
            continue
        tp = int(np.sum((pred == c) & (true == c)))
        pred_c = int(np.sum(pred == c))
        p_c = tp / pred_c if pred_c else 0.0
        r_c = tp / support
        f_c = 2 * p_c * r_c / (p_c + r_c) if (p_c + r_c) else 0.0
        weight = support / n
        precision += weight * p_c
        recall += weight * r_c
        f1 += weight * f_c
    return StandardMetrics(acc=acc, precision=precision, recall=recall, f1=f1)


def uncertainty_confusion(flagged: Iterable[tuple[bool, bool]]) -> UncertaintyCounts:
    """Count (correct, certain) pairs into the four confusion cells."""
    cc = ic = cu = iu = 0
    for correct, certain in flagged:
        if certain:
            if correct:
                cc += 1
            else:
                ic += 1
        elif correct:
            cu += 1
        else:
            iu += 1
    return UncertaintyCounts(cc=cc, ic=ic, cu=cu, iu=iu)


def uncertainty_metrics(counts: UncertaintyCounts) -> UncertaintyMetrics:
    """UAcc, USen, USpe, UPre from the confusion cells.

    USen is the share of incorrect predictions flagged uncertain, USpe the
    share of correct predictions flagged certain, UPre the share of uncertain
    predictions that are actually incorrect, and UAcc the share of
    predictions in the two desirable cells (CC and IU). A 0/0 ratio yields 0
    and the metric name is listed in ``degenerate``.
    """
    if counts.total == 0:
        raise ValueError("cannot compute metrics over zero predictions")
    degenerate = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    usen = ratio(counts.iu, counts.ic + counts.iu, "usen")
    uspe = ratio(counts.cc, counts.cc + counts.cu, "uspe")
    upre = ratio(counts.iu, counts.cu + counts.iu, "upre")
    uacc = (counts.cc + counts.iu) / counts.total
    return UncertaintyMetrics(
        uacc=uacc, usen=usen, uspe=uspe, upre=upre, degenerate=tuple(degenerate)
    )


def default_threshold_grid() -> list[float]:
    """101 evenly spaced normalized-entropy thresholds: 0.00, 0.01, ..., 1.00."""
    return [i / 100 for i in range(101)]


def evaluate_records(
    records: Sequence[PredictionRecord], threshold: float, vocab: ClassVocabulary
) -> MetricReport:
    """Full report for one certainty threshold."""
    std = standard_metrics([r.predicted for r in records], [r.true_label for r in records], vocab)
    flagged = flag_certainty(list(records), threshold)
    counts = uncertainty_confusion((rec.correct, certain) for rec, certain in flagged)
    um = uncertainty_metrics(counts)
    return MetricReport(
        threshold=threshold,
        acc=std.acc,
        precision=std.precision,
        recall=std.recall,
        f1=std.f1,
        counts=counts,
        uacc=um.uacc,
        usen=um.usen,
        uspe=um.uspe,
        upre=um.upre,
        degenerate=um.degenerate,
    )


def threshold_sweep(
    records: Sequence[PredictionRecord],
    grid: Sequence[float],
    vocab: ClassVocabulary,
) -> tuple[float, list[MetricReport]]:
    """Evaluate every threshold; best is the UAcc argmax, ties to the smallest."""
    if not records or not grid:
        raise ValueError("records and grid must be nonempty")
    reports = [evaluate_records(records, t, vocab) for t in grid]
    best = max(
        range(len(reports)), key=lambda i: (reports[i].uacc, -reports[i].threshold)
    )
    return reports[best].threshold, reports


def round_half_up_percent(value: float) -> str:
    """Render a [0,1] fraction as a percentage with 2 decimals, half-up."""
    return str(Decimal(repr(value * 100)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


REPORT_COLUMNS = (
    "experiment",
    "method",
    "threshold",
    "Acc",
    "Pre",
    "Recall",
    "F1",
    "IU",
    "IC",
    "CU",
    "CC",
    "UAcc",
    "USen",
    "USpe",
    "UPre",
)


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    method: str
    report: MetricReport

    def cells(self) -> list[str]:
        r = self.report
        return [
            self.experiment,
            self.method,
            "%.6g" % r.threshold,
            round_half_up_percent(r.acc),
            round_half_up_percent(r.precision),
            round_half_up_percent(r.recall),
            round_half_up_percent(r.f1),
            str(r.counts.iu),
            str(r.counts.ic),
            str(r.counts.cu),
            str(r.counts.cc),
            round_half_up_percent(r.uacc),
            round_half_up_percent(r.usen),
            round_half_up_percent(r.uspe),
            round_half_up_percent(r.upre),
        ]


def write_report_csv(rows: Sequence[ReportRow], path: str | Path) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    lines.extend(",".join(row.cells()) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_report_markdown(rows: Sequence[ReportRow]) -> str:
    header = "| " + " | ".join(REPORT_COLUMNS) + " |"
    rule = "|" + "|".join(["---"] * len(REPORT_COLUMNS)) + "|"
    body = ["| " + " | ".join(row.cells()) + " |" for row in rows]
    return "\n".join([header, rule, *body]) + "\n"


def read_report_csv(path: str | Path) -> list[list[str]]:
    """Raw rows (no header) of a report CSV; used by merge."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected report header {header}")
        return [row for row in reader]


def merge_report_rows(row_sets: Sequence[list[list[str]]]) -> list[list[str]]:
    """Concatenate raw report rows and sort by the UAcc column, descending."""
    merged = [row for rows in row_sets for row in rows]
    uacc_col = REPORT_COLUMNS.index("UAcc")
    merged.sort(key=lambda row: -float(row[uacc_col]))
    return merged
