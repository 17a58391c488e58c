"""Confusion counts, rate metrics, ROC curves and AUC.

The decision rule is strict: predict positive iff score > threshold. The
ROC sweep visits every distinct score once, so tied scores move both class
counts simultaneously and the trapezoidal AUC equals the pairwise statistic
P(pos score > neg score) + 0.5 * P(equal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bag_model import Bag
from .errors import ValidationError
from .objective import bag_score
from .scorer import ScoringModel

ScoredLabel = tuple[float, int]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def pos(self) -> int:
        return self.tp + self.fn

    @property
    def neg(self) -> int:
        return self.fp + self.tn


@dataclass(frozen=True)
class RatesReport:
    """Rates are None (never NaN) when their denominator class is empty."""

    tpr: float | None
    fpr: float | None
    tnr: float | None
    fnr: float | None
    accuracy: float | None


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (fpr, tpr, threshold)
    auc: float


def confusion(scored: list[ScoredLabel], threshold: float) -> ConfusionCounts:
    """Tally predictions (score > threshold means positive) against labels."""
    if len(scored) == 0:
        raise ValidationError("cannot build a confusion matrix from no scores")
    tp = fp = tn = fn = 0
    for s, y in scored:
        if y not in (1, -1):
            raise ValidationError(f"labels must be +1 or -1, got {y!r}")
        if not np.isfinite(s):
            raise ValidationError(f"scores must be finite, got {s!r}")
        predicted_pos = s > threshold
        if y == 1:
            tp += predicted_pos
            fn += not predicted_pos
        else:
            fp += predicted_pos
            tn += not predicted_pos
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def rates(c: ConfusionCounts) -> RatesReport:
    """TPR, FPR, TNR, FNR and accuracy from integer counts.

    Each rate is a single integer division, so the complement identities
    TPR + FNR = 1 and FPR + TNR = 1 hold exactly whenever defined.
    """
    tpr = c.tp / c.pos if c.pos > 0 else None
    fnr = c.fn / c.pos if c.pos > 0 else None
    fpr = c.fp / c.neg if c.neg > 0 else None
    tnr = c.tn / c.neg if c.neg > 0 else None
    total = c.pos + c.neg
    accuracy = (c.tp + c.tn) / total if total > 0 else None
    return RatesReport(tpr=tpr, fpr=fpr, tnr=tnr, fnr=fnr, accuracy=accuracy)


def roc_auc(scored: list[ScoredLabel]) -> RocCurve:
    """ROC curve over all distinct-score thresholds, AUC by trapezoid.

    Cumulative counts stay integers until the final divisions, keeping the
    equivalence with the pairwise statistic exact up to one rounding.
    """
    scores = np.asarray([s for s, _ in scored], dtype=np.float64)
    labels = np.asarray([y for _, y in scored], dtype=np.int64)
    if scores.size and not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    if np.any((labels != 1) & (labels != -1)):
        raise ValidationError("labels must be +1 or -1")
    num_pos = int(np.count_nonzero(labels == 1))
    num_neg = int(np.count_nonzero(labels == -1))
    if num_pos == 0 or num_neg == 0:
        raise ValidationError("ROC needs at least one positive and one negative label")

    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]

    points = [(0.0, 0.0, float("inf"))]
    cum_tp = cum_fp = 0
    prev_tp = prev_fp = 0
    twice_area = 0  # integer: 2 * area in count space
    i = 0
    n = scores.size
    while i < n:
        j = i
        while j < n and scores[j] == scores[i]:
            j += 1
        group = labels[i:j]
        cum_tp += int(np.count_nonzero(group == 1))
        cum_fp += int(np.count_nonzero(group == -1))
        twice_area += (cum_fp - prev_fp) * (cum_tp + prev_tp)
        points.append((cum_fp / num_neg, cum_tp / num_pos, float(scores[i])))
        prev_tp, prev_fp = cum_tp, cum_fp
        i = j
    auc = twice_area / (2 * num_pos * num_neg)
    return RocCurve(points=tuple(points), auc=auc)


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    rates: RatesReport
    roc: RocCurve
    threshold: float
    num_bags: int

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "num_bags": self.num_bags,
            "threshold": self.threshold,
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "tn": self.counts.tn,
                "fn": self.counts.fn,
            },
            "rates": {
                "tpr": self.rates.tpr,
                "fpr": self.rates.fpr,
                "tnr": self.rates.tnr,
                "fnr": self.rates.fnr,
                "accuracy": self.rates.accuracy,
            },
            "auc": self.roc.auc,
            "roc_points": [[f, t, th] for f, t, th in self.roc.points],
        }


def score_bags(model: ScoringModel, bags: list[Bag]) -> list[ScoredLabel]:
    """Eval-mode bag scores (max over instances) with their true labels."""
    return [(bag_score(model, bag)[0], bag.label) for bag in bags]


def evaluate_bags(model: ScoringModel, bags: list[Bag], threshold: float | None = None) -> EvalReport:
    """Bag-level confusion, rates, and ROC at the given threshold.

    The default threshold is the midpoint of the model's output range
    (0.5 for sigmoid, 0.0 for tanh).
    """
    if not bags:
        raise ValidationError("cannot evaluate an empty bag list")
    if threshold is None:
        threshold = model.default_threshold
    scored = score_bags(model, bags)
    c = confusion(scored, threshold)
    return EvalReport(
        counts=c,
        rates=rates(c),
        roc=roc_auc(scored),
        threshold=threshold,
        num_bags=len(bags),
    )
