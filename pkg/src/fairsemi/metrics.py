"""Accuracy and demographic-parity metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GROUP_ORDER
from .errors import DataValueError, ShapeError, UndefinedRateError

__all__ = [
    "FairnessReport",
    "accuracy",
    "demographic_parity",
    "discrimination_level",
    "predicted_group_counts",
    "evaluate",
]


def _vec(v, what) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ShapeError(f"{what} must be 1-d")
    return arr


def accuracy(pred, truth) -> float:
    pred, truth = _vec(pred, "pred"), _vec(truth, "truth")
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {pred.shape[0]} predictions, {truth.shape[0]} labels")
    if pred.size == 0:
        raise DataValueError("accuracy of an empty vector is undefined")
    return float(np.count_nonzero(pred == truth) / pred.size)


def demographic_parity(pred, protected) -> tuple[float, float]:
    """Positive-prediction rates ``(gamma0, gamma1)`` for A=0 and A=1."""
    pred, protected = _vec(pred, "pred"), _vec(protected, "protected")
    if pred.shape != protected.shape:
        raise ShapeError("pred and protected differ in length")
    rates = []
    for a in (0, 1):
        m = protected == a
        n = np.count_nonzero(m)
        if n == 0:
            raise UndefinedRateError(f"protected group A={a} is absent from the evaluation set")
        rates.append(float(np.count_nonzero(pred[m] == 1) / n))
    return rates[0], rates[1]


def discrimination_level(pred, protected) -> float:
    g0, g1 = demographic_parity(pred, protected)
    return abs(g0 - g1)


def predicted_group_counts(pred, protected) -> tuple[int, int, int, int]:
    """Counts of predicted (A, Y-hat) cells in G_PP, G_UP, G_PN, G_UN order."""
    pred, protected = np.asarray(pred), np.asarray(protected)
    return tuple(
        int(np.count_nonzero((protected == k.protected) & (pred == k.label))) for k in GROUP_ORDER
    )


@dataclass(frozen=True)
class FairnessReport:
    accuracy: float
    gamma0: float
    gamma1: float
    discrimination: float
    group_pred_counts: tuple[int, int, int, int]

    @property
    def n_rows(self) -> int:
        return sum(self.group_pred_counts)


def evaluate(pred, truth, protected) -> FairnessReport:
    g0, g1 = demographic_parity(pred, protected)
    return FairnessReport(
        accuracy=accuracy(pred, truth),
        gamma0=g0,
        gamma1=g1,
        discrimination=abs(g0 - g1),
        group_pred_counts=predicted_group_counts(pred, protected),
    )
