"""Bias / variance / noise decomposition of zero-one loss, split by protected group.

Expectations over training sets are estimated with size-preserving bootstrap
resamples of a training pool. Variance and noise enter the per-group totals
with the two-class zero-one coefficients: ``c_v = +1`` where the main
prediction equals the optimal label and ``-1`` otherwise, and
``c_n = 2 P(prediction = y*) - 1``. With those coefficients

    E[loss] = bias + c_v * variance + c_n * noise

holds exactly at every point.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .dataset import Dataset
from .ensemble import EnsembleModel, ensemble_predict
from .errors import DataValueError, FairSemiError, ShapeError, TrainingError, UndefinedRateError
from .learners import LinearModel, TrainConfig, predict, train

__all__ = [
    "MainPrediction",
    "PointDecomposition",
    "DecompositionReport",
    "PseudoNoise",
    "Theorem1Check",
    "bootstrap_source",
    "linear_trainer",
    "estimate_main_prediction",
    "decompose_point",
    "decompose_points",
    "noise_from_posterior",
    "group_decomposition",
    "group_variance",
    "pseudo_noise_discrimination",
    "check_theorem1",
    "write_decomposition_csv",
    "write_pseudo_noise_csv",
]

Model = Union[LinearModel, EnsembleModel, Callable[[Dataset], np.ndarray]]
Trainer = Callable[[Dataset, int], Model]
DataSource = Callable[[np.random.Generator], Dataset]


def _labels_of(model: Model, data: Dataset) -> np.ndarray:
    if isinstance(model, LinearModel):
        return predict(model, data)
    if isinstance(model, EnsembleModel):
        return ensemble_predict(model, data)
    return np.asarray(model(data), dtype=np.int64)


def bootstrap_source(pool: Dataset) -> DataSource:
    """Size-preserving sampling with replacement from ``pool``."""

    def draw(rng: np.random.Generator) -> Dataset:
        return pool.subset(rng.integers(0, pool.n_rows, pool.n_rows))

    return draw


def linear_trainer(cfg: TrainConfig) -> Trainer:
    def fit(data: Dataset, seed: int) -> LinearModel:
        return train(data, cfg.with_seed(seed))

    return fit


@dataclass(frozen=True, eq=False)
class MainPrediction:
    """Modal prediction per evaluation point over ``trials`` trained models."""

    y_m: np.ndarray
    agreement: np.ndarray
    ties: np.ndarray
    trial_predictions: np.ndarray

    @property
    def trials(self) -> int:
        return self.trial_predictions.shape[0]


def _main_from_matrix(preds: np.ndarray) -> MainPrediction:
    t = preds.shape[0]
    ones = preds.sum(axis=0)
    y_m = (2 * ones > t).astype(np.int64)
    ties = 2 * ones == t
    agreement = np.where(y_m == 1, ones, t - ones) / t
    return MainPrediction(y_m, agreement, ties, preds)


def estimate_main_prediction(
    trainer: Trainer,
    data_source: DataSource,
    eval_points: Dataset,
    trials: int,
    seed: int,
) -> MainPrediction:
    """Train ``trials`` models on independent resamples and take the per-point mode.

    Trial ``t`` draws its training set with ``default_rng(seed + t)`` and
    trains with seed ``seed + t``. Ties resolve to 0 and are flagged.
    """
    if trials < 1:
        raise DataValueError("trials must be >= 1")
    preds = np.empty((trials, eval_points.n_rows), dtype=np.int64)
    for t in range(trials):
        try:
            model = trainer(data_source(np.random.default_rng(seed + t)), seed + t)
        except FairSemiError as exc:
            raise TrainingError(f"decomposition trial {t} failed: {exc}") from exc
        preds[t] = _labels_of(model, eval_points)
    return _main_from_matrix(preds)


def decompose_point(y_star: int, y_m: int, trial_preds, label_draws) -> tuple[float, float, float]:
    """Zero-one bias, variance and noise at a single point."""
    trial_preds = np.asarray(trial_preds)
    label_draws = np.asarray(label_draws)
    if trial_preds.size == 0 or label_draws.size == 0:
        raise DataValueError("need at least one trial prediction and one label draw")
    bias = float(y_star != y_m)
    variance = float(np.mean(trial_preds != y_m))
    noise = float(np.mean(label_draws != y_star))
    return bias, variance, noise


def noise_from_posterior(p_positive, y_star) -> np.ndarray:
    """Exact noise ``P(Y != y*)`` when the class posterior is known."""
    p = np.asarray(p_positive, dtype=np.float64)
    return np.where(np.asarray(y_star) == 1, 1.0 - p, p)


@dataclass(frozen=True, eq=False)
class PointDecomposition:
    y_star: np.ndarray
    y_m: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    noise: np.ndarray
    p_star: np.ndarray  # fraction of trial predictions equal to y*

    @property
    def c_v(self) -> np.ndarray:
        return np.where(self.y_m == self.y_star, 1.0, -1.0)

    @property
    def c_n(self) -> np.ndarray:
        return 2.0 * self.p_star - 1.0

    def expected_loss(self) -> np.ndarray:
        return self.bias + self.c_v * self.variance + self.c_n * self.noise


def decompose_points(y_star, main: MainPrediction, label_draws=None, noise=None) -> PointDecomposition:
    """Vectorized :func:`decompose_point` over all evaluation points.

    Give either ``label_draws`` with shape (draws, N) or a precomputed
    ``noise`` vector (e.g. from :func:`noise_from_posterior`).
    """
    y_star = np.asarray(y_star, dtype=np.int64)
    preds = main.trial_predictions
    if y_star.shape != main.y_m.shape:
        raise ShapeError("y_star and main prediction differ in length")
    if (label_draws is None) == (noise is None):
        raise DataValueError("pass exactly one of label_draws / noise")
    if label_draws is not None:
        draws = np.atleast_2d(np.asarray(label_draws))
        if draws.shape[1] != y_star.shape[0]:
            raise ShapeError("label_draws must have shape (draws, N)")
        noise = np.mean(draws != y_star, axis=0)
    noise = np.asarray(noise, dtype=np.float64)
    return PointDecomposition(
        y_star=y_star,
        y_m=main.y_m,
        bias=(y_star != main.y_m).astype(np.float64),
        variance=np.mean(preds != main.y_m, axis=0),
        noise=noise,
        p_star=np.mean(preds == y_star, axis=0),
    )


@dataclass(frozen=True)
class PseudoNoise:
    """Mislabeling rates of pseudo-labels per (true label, protected) cell."""

    cells: dict
    n0p: float
    n1p: float
    nap: float


@dataclass(frozen=True)
class DecompositionReport:
    """Per-group (index 0 = unprotected, 1 = protected) decomposition.

    ``bias``, ``variance`` and ``noise`` carry the loss coefficients and sum to
    ``decomposition_gamma``; the ``plain_*`` fields are the raw averages.
    """

    bias: tuple[float, float]
    variance: tuple[float, float]
    noise: tuple[float, float]
    decomposition_gamma: tuple[float, float]
    plain_variance: tuple[float, float]
    plain_noise: tuple[float, float]
    n_points: tuple[int, int]
    trials: int
    pseudo_noise: PseudoNoise | None = field(default=None)

    @property
    def bias_diff(self) -> float:
        return abs(self.bias[0] - self.bias[1])

    @property
    def variance_diff(self) -> float:
        return abs(self.variance[0] - self.variance[1])

    @property
    def noise_diff(self) -> float:
        return abs(self.noise[0] - self.noise[1])

    @property
    def expected_discrimination(self) -> float:
        return abs(self.decomposition_gamma[0] - self.decomposition_gamma[1])


def _group_masks(protected: np.ndarray):
    masks = [protected == 0, protected == 1]
    for a, m in enumerate(masks):
        if not m.any():
            raise UndefinedRateError(f"no evaluation points with A={a}")
    return masks


def group_decomposition(points: Dataset, decomposed: PointDecomposition, trials: int = 0) -> DecompositionReport:
    if decomposed.bias.shape[0] != points.n_rows:
        raise ShapeError("decomposition and evaluation points differ in length")
    masks = _group_masks(points.protected)
    cv_var = decomposed.c_v * decomposed.variance
    cn_noise = decomposed.c_n * decomposed.noise

    def per_group(values):
        return tuple(float(values[m].mean()) for m in masks)

    bias, var, noise = per_group(decomposed.bias), per_group(cv_var), per_group(cn_noise)
    return DecompositionReport(
        bias=bias,
        variance=var,
        noise=noise,
        decomposition_gamma=tuple(b + v + n for b, v, n in zip(bias, var, noise)),
        plain_variance=per_group(decomposed.variance),
        plain_noise=per_group(decomposed.noise),
        n_points=tuple(int(m.sum()) for m in masks),
        trials=trials,
    )


def group_variance(points: Dataset, main: MainPrediction) -> tuple[float, float]:
    """Per-group mean disagreement with the main prediction (no y* needed)."""
    masks = _group_masks(points.protected)
    v = np.mean(main.trial_predictions != main.y_m, axis=0)
    return tuple(float(v[m].mean()) for m in masks)


def pseudo_noise_discrimination(true_labels, pseudo_labels, protected) -> PseudoNoise:
    y = np.asarray(true_labels)
    p = np.asarray(pseudo_labels)
    a = np.asarray(protected)
    if not (y.shape == p.shape == a.shape):
        raise ShapeError("true labels, pseudo labels and protected differ in length")
    cells = {}
    for yv in (0, 1):
        for av in (0, 1):
            m = (y == yv) & (a == av)
            if not m.any():
                raise UndefinedRateError(f"no rows with y={yv}, a={av}")
            cells[(yv, av)] = float(np.mean(p[m] != yv))
    n1p = cells[(0, 1)] + cells[(1, 1)]
    n0p = cells[(0, 0)] + cells[(1, 0)]
    return PseudoNoise(cells, n0p, n1p, abs(n1p - n0p))


@dataclass(frozen=True)
class Theorem1Check:
    holds: bool
    margin: float
    sl_variance_gap: float
    ssl_variance_gap: float
    pseudo_noise: float


def check_theorem1(
    report_sl: DecompositionReport, report_ssl: DecompositionReport, pseudo_noise: float
) -> Theorem1Check:
    """Does the drop in between-group variance gap outweigh the pseudo-label noise gap?

    Diagnostic only.
    """
    gap_sl = report_sl.variance_diff
    gap_ssl = report_ssl.variance_diff
    margin = (gap_sl - gap_ssl) - float(pseudo_noise)
    return Theorem1Check(margin >= 0, margin, gap_sl, gap_ssl, float(pseudo_noise))


def write_decomposition_csv(report: DecompositionReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "bias", "variance", "noise", "gamma"])
        for a in (0, 1):
            w.writerow([a, report.bias[a], report.variance[a], report.noise[a], report.decomposition_gamma[a]])
        w.writerow(["abs_diff", report.bias_diff, report.variance_diff, report.noise_diff,
                    report.expected_discrimination])


def write_pseudo_noise_csv(noise: PseudoNoise, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "value"])
        for (yv, av), v in sorted(noise.cells.items()):
            w.writerow([f"y={yv},a={av}", v])
        w.writerow(["N_0p", noise.n0p])
        w.writerow(["N_1p", noise.n1p])
        w.writerow(["N_ap", noise.nap])
