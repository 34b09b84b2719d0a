"""ROC curves and tie-corrected AUC, per class and averaged.

AUC is the Mann-Whitney rank statistic: the probability that a random
positive outranks a random negative, with tied pairs credited one half.
This is the only tie policy under which auc(-s) == 1 - auc(s) holds, and it
makes the trapezoidal area under the ROC curve (one point per distinct
threshold) agree with the rank computation to rounding error.

A class with no positives or no negatives has no defined AUC; such classes
are excluded from the mean and reported by name rather than silently folded
in.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ensemblefuse import kernels
from ensemblefuse.errors import ValidationError
from ensemblefuse.model_io import LabelMatrix, PredictionMatrix, align


@dataclass(frozen=True)
class RocCurve:
    """Operating points (fpr, tpr, threshold), one per distinct score.

    The first point is (0, 0) at threshold +inf; the last is (1, 1) at the
    minimum score. A sample is predicted positive when score >= threshold.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def points(self) -> list[tuple[float, float, float]]:
        """Ordered (fpr, tpr, threshold) operating points."""
        return [
            (float(x), float(y), float(t))
            for x, y, t in zip(self.fpr, self.tpr, self.thresholds)
        ]

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        return float(np.trapezoid(self.tpr, self.fpr))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("threshold,fpr,tpr\n")
            for t, x, y in zip(self.thresholds, self.fpr, self.tpr):
                fh.write(f"{t:.17g},{x:.17g},{y:.17g}\n")


@dataclass(frozen=True)
class AucReport:
    """Per-class AUC (None where undefined) plus the mean over defined classes."""

    per_class: dict[str, float | None]
    mean: float
    defined_count: int

    @property
    def undefined_classes(self) -> tuple[str, ...]:
        return tuple(name for name, value in self.per_class.items() if value is None)

    def to_dict(self) -> dict:
        return {
            "per_class": dict(self.per_class),
            "mean": self.mean,
            "defined_count": self.defined_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _as_score_label_pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.ascontiguousarray(np.asarray(scores, dtype=np.float64))
    y = np.ascontiguousarray(np.asarray(labels, dtype=np.float64))
    if s.ndim != 1 or y.ndim != 1:
        raise ValidationError("scores and labels must be 1-D")
    if s.shape[0] != y.shape[0]:
        raise ValidationError(f"{s.shape[0]} scores but {y.shape[0]} labels")
    if s.shape[0] < 1:
        raise ValidationError("no samples")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    return s, y


def auc(scores, labels) -> float | None:
    """Tie-corrected rank AUC; None when the class has only one label value."""
    s, y = _as_score_label_pair(scores, labels)
    value = kernels.rank_auc(s, y)
    return None if math.isnan(value) else float(value)


def roc_curve(scores, labels) -> RocCurve:
    """ROC operating points over descending distinct thresholds."""
    s, y = _as_score_label_pair(scores, labels)
    n_pos = int(y.sum())
    n_neg = s.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError(
            "ROC curve needs at least one positive and one negative sample"
        )
    order = np.argsort(s, kind="stable")[::-1]
    s_desc = s[order]
    y_desc = y[order]
    # last index of each tie group in descending score order
    group_end = np.flatnonzero(np.append(s_desc[1:] != s_desc[:-1], True))
    tp = np.cumsum(y_desc)[group_end]
    fp = group_end + 1 - tp
    thresholds = np.concatenate(([np.inf], s_desc[group_end]))
    tpr = np.concatenate(([0.0], tp / n_pos))
    fpr = np.concatenate(([0.0], fp / n_neg))
    for arr in (thresholds, tpr, fpr):
        arr.setflags(write=False)
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr)


def column_aucs(values: np.ndarray, label_values: np.ndarray) -> np.ndarray:
    """Per-column rank AUC of two aligned (n, c) arrays; NaN where undefined."""
    c = values.shape[1]
    out = np.empty(c)
    for j in range(c):
        out[j] = kernels.rank_auc(
            np.ascontiguousarray(values[:, j]), np.ascontiguousarray(label_values[:, j])
        )
    return out


def mean_defined_auc(values: np.ndarray, label_values: np.ndarray) -> float:
    """Mean AUC over the classes where it is defined; NaN if none are."""
    aucs = column_aucs(values, label_values)
    defined = aucs[~np.isnan(aucs)]
    if defined.size == 0:
        return float("nan")
    return float(defined.mean())


def evaluate(preds: PredictionMatrix, labels: LabelMatrix) -> AucReport:
    """Column-wise AUC report with the unweighted mean over defined classes."""
    align([preds], labels)
    aucs = column_aucs(preds.values, labels.values)
    defined = aucs[~np.isnan(aucs)]
    if defined.size == 0:
        raise ValidationError("AUC is undefined for every class")
    per_class: dict[str, float | None] = {
        name: (None if math.isnan(value) else float(value))
        for name, value in zip(preds.classes.names, aucs)
    }
    return AucReport(
        per_class=per_class,
        mean=float(defined.mean()),
        defined_count=int(defined.size),
    )
