"""Performance and group-fairness metrics for binary predictions.

Group code 1 is the protected group. Any metric whose conditioning set is
empty raises :class:`UndefinedMetricError` instead of returning 0, since a
fabricated 0 would read as "perfectly fair".
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class UndefinedMetricError(ValueError):
    """The metric's conditioning set is empty."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _binary(a, name):
    a = np.asarray(a)
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return a.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionCounts:
    y_true, y_pred = _binary(y_true, "y_true"), _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=len(y_true) - tp - fp - fn)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise UndefinedMetricError("accuracy of an empty set")
    return (c.tp + c.tn) / c.total


def gmeans(c: ConfusionCounts) -> float:
    """Geometric mean of sensitivity and specificity."""
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise UndefinedMetricError("gmeans needs both classes present")
    return math.sqrt(c.tp / (c.tp + c.fn) * (c.tn / (c.tn + c.fp)))


def f1(c: ConfusionCounts) -> float:
    """F1 score; 0 when there are positives but none are hit."""
    if c.tp + c.fp + c.fn == 0:
        raise UndefinedMetricError("f1 with no positive labels or predictions")
    if c.tp == 0:
        return 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class GroupRates:
    """Per-group positive, true-positive and false-positive rates.

    Entries are None where the conditioning set is empty.
    """

    positive_rate: tuple[float | None, float | None]
    tpr: tuple[float | None, float | None]
    fpr: tuple[float | None, float | None]


def _rate(pred, mask):
    n = int(mask.sum())
    return None if n == 0 else float(pred[mask].sum()) / n


def group_rates(y_true, y_pred, s) -> GroupRates:
    y_true, y_pred, s = _binary(y_true, "y_true"), _binary(y_pred, "y_pred"), _binary(s, "s")
    if not (y_true.shape == y_pred.shape == s.shape):
        raise ValueError("y_true, y_pred and s must have equal lengths")
    groups = [s == 0, s == 1]
    return GroupRates(
        positive_rate=tuple(_rate(y_pred, g) for g in groups),
        tpr=tuple(_rate(y_pred, g & (y_true == 1)) for g in groups),
        fpr=tuple(_rate(y_pred, g & (y_true == 0)) for g in groups),
    )


def _gap(pair, what):
    if pair[0] is None or pair[1] is None:
        raise UndefinedMetricError(f"{what} undefined for a group")
    return pair[0] - pair[1]


def statistical_parity_signed(y_pred, s) -> float:
    y_pred = np.asarray(y_pred)
    return _gap(group_rates(np.zeros_like(y_pred), y_pred, s).positive_rate,
                "positive rate")


def statistical_parity_diff(y_pred, s) -> float:
    """|P(yhat=1 | S=0) - P(yhat=1 | S=1)|"""
    return abs(statistical_parity_signed(y_pred, s))


def equal_opportunity_signed(y_true, y_pred, s) -> float:
    return _gap(group_rates(y_true, y_pred, s).tpr, "true-positive rate")


def equal_opportunity_diff(y_true, y_pred, s) -> float:
    """|TPR_0 - TPR_1|"""
    return abs(equal_opportunity_signed(y_true, y_pred, s))


def equalized_odds_signed(y_true, y_pred, s) -> float:
    r = group_rates(y_true, y_pred, s)
    return 0.5 * _gap(r.fpr, "false-positive rate") + 0.5 * _gap(r.tpr, "true-positive rate")


def avg_equalized_odds_diff(y_true, y_pred, s, variant: str = "literal") -> float:
    """Averaged equalized-odds difference.

    ``literal``: |(FPR_0 - FPR_1)/2 + (TPR_0 - TPR_1)/2|, so opposite-signed
    gaps cancel. ``absolute``: (|FPR_0 - FPR_1| + |TPR_0 - TPR_1|)/2.
    """
    if variant == "literal":
        return abs(equalized_odds_signed(y_true, y_pred, s))
    if variant == "absolute":
        r = group_rates(y_true, y_pred, s)
        return 0.5 * abs(_gap(r.fpr, "false-positive rate")) + \
            0.5 * abs(_gap(r.tpr, "true-positive rate"))
    raise ValueError(f"unknown equalized-odds variant {variant!r}")


METRIC_NAMES = ("accuracy", "f1", "gmeans", "sp_diff", "eopp_diff", "eodds_diff")
SIGNED_NAMES = ("sp_signed", "eopp_signed", "eodds_signed")


def evaluate(y_true, y_pred, s, eodds_variant: str = "literal") -> tuple[dict, list[str]]:
    """All metrics at once.

    Returns ``(values, undefined)``: undefined metrics map to None in
    ``values`` and are listed by name in ``undefined``.
    """
    c = confusion(y_true, y_pred)
    funcs = {
        "accuracy": lambda: accuracy(c),
        "f1": lambda: f1(c),
        "gmeans": lambda: gmeans(c),
        "sp_diff": lambda: statistical_parity_diff(y_pred, s),
        "eopp_diff": lambda: equal_opportunity_diff(y_true, y_pred, s),
        "eodds_diff": lambda: avg_equalized_odds_diff(y_true, y_pred, s, eodds_variant),
        "sp_signed": lambda: statistical_parity_signed(y_pred, s),
        "eopp_signed": lambda: equal_opportunity_signed(y_true, y_pred, s),
        "eodds_signed": lambda: equalized_odds_signed(y_true, y_pred, s),
    }
    values, undefined = {}, []
    for name, fn in funcs.items():
        try:
            values[name] = fn()
        except UndefinedMetricError:
            values[name] = None
            undefined.append(name)
    return values, undefined
