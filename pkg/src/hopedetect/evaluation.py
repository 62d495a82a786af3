"""Confusion matrices, precision/recall/F1 reports and model comparison tables."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import LABELS


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class and columns = predicted class."""

    labels: tuple
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, key):
        true, pred = key
        return int(self.counts[self.labels.index(true), self.labels.index(pred)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\pred", *self.labels])
        for label, row in zip(self.labels, self.counts):
            w.writerow([label, *row.tolist()])
        return buf.getvalue()

    def to_long_csv(self) -> str:
        """``row,col,count`` triples for external heat-map plotting."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "count"])
        for i, t in enumerate(self.labels):
            for j, p in enumerate(self.labels):
                w.writerow([t, p, int(self.counts[i, j])])
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [["true\\pred", *self.labels]]
        cells += [[t, *map(str, row.tolist())] for t, row in zip(self.labels, self.counts)]
        width = max(len(c) for row in cells for c in row)
        return "\n".join("  ".join(c.rjust(width) for c in row) for row in cells) + "\n"


def confusion_matrix(y_true, y_pred, labels=LABELS) -> ConfusionMatrix:
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted labels")
    if not y_true:
        raise ValueError("no labels to evaluate")
    labels = tuple(labels)
    index = {label: i for i, label in enumerate(labels)}
    unknown = sorted({str(v) for v in (*y_true, *y_pred) if v not in index})
    if unknown:
        raise ValueError(f"labels outside the class order {labels}: {unknown}")
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(counts, ([index[v] for v in y_true], [index[v] for v in y_pred]), 1)
    return ConfusionMatrix(labels, counts)


@dataclass(frozen=True)
class EvaluationReport:
    matrix: ConfusionMatrix
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    warnings: tuple = field(default=())

    @property
    def labels(self):
        return self.matrix.labels

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.matrix.counts) / self.matrix.total)

    def _weighted(self, values):
        return float(np.dot(values, self.support) / self.support.sum())

    @property
    def weighted_precision(self):
        return self._weighted(self.precision)

    @property
    def weighted_recall(self):
        return self._weighted(self.recall)

    @property
    def weighted_f1(self):
        return self._weighted(self.f1)

    @property
    def macro_precision(self):
        return float(self.precision.mean())

    @property
    def macro_recall(self):
        return float(self.recall.mean())

    @property
    def macro_f1(self):
        return float(self.f1.mean())

    def as_dict(self):
        return {
            "labels": list(self.labels),
            "per_class": {
                label: {"precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
                for label, p, r, f, s in zip(self.labels, self.precision, self.recall,
                                              self.f1, self.support)
            },
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall,
                      "f1": self.macro_f1},
            "weighted": {"precision": self.weighted_precision, "recall": self.weighted_recall,
                         "f1": self.weighted_f1},
            "accuracy": self.accuracy,
            "confusion_matrix": self.matrix.counts.tolist(),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "precision", "recall", "f1", "support"])
        for label, p, r, f, s in zip(self.labels, self.precision, self.recall, self.f1, self.support):
            w.writerow([label, f"{p:.6f}", f"{r:.6f}", f"{f:.6f}", int(s)])
        total = int(self.support.sum())
        w.writerow(["macro avg", f"{self.macro_precision:.6f}", f"{self.macro_recall:.6f}",
                    f"{self.macro_f1:.6f}", total])
        w.writerow(["weighted avg", f"{self.weighted_precision:.6f}",
                    f"{self.weighted_recall:.6f}", f"{self.weighted_f1:.6f}", total])
        return buf.getvalue()

    def to_text(self) -> str:
        rows = [("", "precision", "recall", "f1", "support")]
        for label, p, r, f, s in zip(self.labels, self.precision, self.recall, self.f1, self.support):
            rows.append((label, f"{p:.3f}", f"{r:.3f}", f"{f:.3f}", str(int(s))))
        total = str(int(self.support.sum()))
        rows.append(("accuracy", "", "", f"{self.accuracy:.3f}", total))
        rows.append(("macro avg", f"{self.macro_precision:.3f}", f"{self.macro_recall:.3f}",
                     f"{self.macro_f1:.3f}", total))
        rows.append(("weighted avg", f"{self.weighted_precision:.3f}",
                     f"{self.weighted_recall:.3f}", f"{self.weighted_f1:.3f}", total))
        w0 = max(len(r[0]) for r in rows)
        lines = [r[0].ljust(w0) + "".join(c.rjust(11) for c in r[1:]) for r in rows]
        for msg in self.warnings:
            lines.append(f"warning: {msg}")
        return "\n".join(lines) + "\n"


def _safe_ratio(num, den):
    out = np.zeros(len(num), dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def classification_report(matrix: ConfusionMatrix) -> EvaluationReport:
    """Per-class and averaged metrics; undefined ratios are reported as 0."""
    if matrix.total <= 0:
        raise ValueError("confusion matrix is empty")
    counts = matrix.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)
    precision = _safe_ratio(tp, predicted)
    recall = _safe_ratio(tp, support)
    f1 = _safe_ratio(2 * precision * recall, precision + recall)
    notes = []
    for label, col, row in zip(matrix.labels, predicted, support):
        if col == 0:
            notes.append(f"precision of {label} is undefined (never predicted); reported as 0")
        if row == 0:
            notes.append(f"recall of {label} is undefined (no true instances); reported as 0")
    return EvaluationReport(matrix, precision, recall, f1, support.astype(np.int64), tuple(notes))


def evaluate(y_true, y_pred, labels=LABELS) -> EvaluationReport:
    return classification_report(confusion_matrix(y_true, y_pred, labels))


def weighted_f1(y_true, y_pred, labels=None) -> float:
    if labels is None:
        labels = sorted(set(y_true) | set(y_pred))
    return evaluate(y_true, y_pred, labels).weighted_f1


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    language: str
    precision: float
    recall: float
    f1: float
    best: bool


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple

    def to_text(self) -> str:
        header = ("Model", "Language", "P", "R", "F", "")
        cells = [header] + [
            (r.model, r.language, f"{r.precision:.3f}", f"{r.recall:.3f}", f"{r.f1:.3f}",
             "*" if r.best else "")
            for r in self.rows
        ]
        widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
        lines = []
        for c in cells:
            lines.append("  ".join(v.ljust(w) if i < 2 else v.rjust(w)
                                   for i, (v, w) in enumerate(zip(c, widths))).rstrip())
        lines.append("(* = best weighted F1 per language)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "language", "precision", "recall", "weighted_f1", "best"])
        for r in self.rows:
            w.writerow([r.model, r.language, f"{r.precision:.6f}", f"{r.recall:.6f}",
                        f"{r.f1:.6f}", int(r.best)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([r.__dict__ for r in self.rows], indent=2)

    def best(self, language) -> list:
        return [r.model for r in self.rows if r.language == language and r.best]


def compare_report(reports) -> ComparisonTable:
    """Tabulate weighted P/R/F1 for ``(name, report)`` or ``(name, language, report)`` entries.

    Every row whose F1 equals its language's maximum is flagged, so the
    flags do not depend on row order.
    """
    entries = []
    for item in reports:
        if len(item) == 2:
            name, report = item
            language = "other"
        else:
            name, language, report = item
        entries.append((name, language, report))
    if not entries:
        raise ValueError("nothing to compare")
    best = {}
    for _, language, report in entries:
        best[language] = max(best.get(language, -1.0), report.weighted_f1)
    rows = tuple(
        ComparisonRow(name, language, report.weighted_precision, report.weighted_recall,
                      report.weighted_f1, report.weighted_f1 == best[language])
        for name, language, report in entries
    )
    return ComparisonTable(rows)
