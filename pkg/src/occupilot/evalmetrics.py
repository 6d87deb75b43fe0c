"""Confusion-matrix construction and accuracy/precision/recall/F1 reporting."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyEvaluation, LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricReport:
    """Four classification metrics; a metric is None when its denominator is 0."""

    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def confusion(predictions, labels, positive_class=1) -> ConfusionCounts:
    """Count tp/tn/fp/fn of ``predictions`` against ``labels``."""
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise LengthMismatch(len(predictions), len(labels))
    if not labels:
        raise EmptyEvaluation()
    tp = tn = fp = fn = 0
    for p, y in zip(predictions, labels):
        if y == positive_class:
            if p == positive_class:
                tp += 1
            else:
                fn += 1
        else:
            if p == positive_class:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics(counts: ConfusionCounts) -> MetricReport:
    """accuracy = (TP+TN)/(TP+FN+FP+TN), precision = TP/(TP+FP),
    recall = TP/(TP+FN), F1 = 2*precision*recall/(precision+recall).

    Undefined metrics (zero denominator) come back as None, never NaN.
    """
    if counts.total == 0:
        raise EmptyEvaluation()
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp > 0 else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricReport(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def evaluate(predictions, labels, positive_class=1) -> MetricReport:
    return metrics(confusion(predictions, labels, positive_class))


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def render_table(rows) -> str:
    """Render an aligned text table.

    ``rows`` is a list of (algorithm, location, MetricReport). Column order:
    Algorithm, Location, Accuracy, Precision, Recall, F1. Values at 3
    decimals, undefined rendered "n/a".
    """
    header = ("Algorithm", "Location", "Accuracy", "Precision", "Recall", "F1")
    body = [
        (
            algo,
            loc,
            _fmt(rep.accuracy),
            _fmt(rep.precision),
            _fmt(rep.recall),
            _fmt(rep.f1),
        )
        for algo, loc, rep in rows
    ]
    widths = [max(len(header[c]), *(len(r[c]) for r in body)) if body else len(header[c])
              for c in range(6)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for r in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"
