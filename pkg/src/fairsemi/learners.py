"""Linear logistic-regression and linear-SVM base learners trained by mini-batch SGD."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import _backend
from .dataset import Dataset
from .errors import ConfigError, DegenerateDataError, ShapeError, TrainingError

__all__ = [
    "LOSSES",
    "MODEL_LOSS",
    "TrainConfig",
    "LinearModel",
    "train",
    "predict",
    "decision_score",
    "decision_scores",
    "save_model",
    "load_model",
]

LOSSES = ("logistic", "hinge")
# CLI/config model names -> loss kinds
MODEL_LOSS = {"logreg": "logistic", "linear_svm": "hinge"}


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters.

    ``include_protected`` appends the protected attribute as an extra input
    column; it is off by default so the protected attribute is used for
    evaluation only.
    """

    loss: str = "logistic"
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 64
    l2: float = 1e-4
    seed: int = 0
    include_protected: bool = False

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    intercept: float
    loss: str = "logistic"
    uses_protected: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.intercept):
            raise TrainingError("model parameters are not finite")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]


def train(
    data: Dataset,
    cfg: TrainConfig,
    on_epoch: Callable[[int, np.ndarray, float], None] | None = None,
) -> LinearModel:
    """Fit by mini-batch SGD; deterministic given ``(data, cfg)``.

    ``on_epoch(epoch, w, b)`` is called after every epoch (used for tracing).
    """
    y = data.require_labels()
    if data.n_rows < 2 or y.min() == y.max():
        raise DegenerateDataError("training needs at least two rows and both classes")
    X = np.ascontiguousarray(data.design_matrix(cfg.include_protected), dtype=np.float64)
    yf = y.astype(np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    rng = np.random.default_rng(cfg.seed)
    hinge = int(cfg.loss == "hinge")
    for epoch in range(cfg.epochs):
        order = rng.permutation(data.n_rows).astype(np.int64)
        # divergence is detected below; silence numpy's overflow chatter
        with np.errstate(over="ignore", invalid="ignore"):
            b = _backend.sgd_epoch(X, yf, w, b, order, cfg.learning_rate, cfg.l2, cfg.batch_size, hinge)
        if not (np.isfinite(b) and np.all(np.isfinite(w))):
            raise TrainingError(f"SGD diverged in epoch {epoch} (learning_rate={cfg.learning_rate})")
        if on_epoch is not None:
            on_epoch(epoch, w, b)
    return LinearModel(w, b, cfg.loss, cfg.include_protected)


def decision_scores(model: LinearModel, data: Dataset) -> np.ndarray:
    X = data.design_matrix(model.uses_protected)
    if X.shape[1] != model.n_inputs:
        raise ShapeError(f"model expects {model.n_inputs} inputs, data has {X.shape[1]}")
    return X @ model.weights + model.intercept


def decision_score(model: LinearModel, x) -> float:
    """``w . x + b`` for a single input vector (protected column included if the model uses it)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.n_inputs:
        raise ShapeError(f"model expects {model.n_inputs} inputs, got {x.shape[0]}")
    return float(x @ model.weights + model.intercept)


def predict(model: LinearModel, data: Dataset) -> np.ndarray:
    """Hard labels; a score of exactly 0 predicts 1."""
    return (decision_scores(model, data) >= 0).astype(np.int64)


def save_model(model: LinearModel, path: str | Path) -> None:
    """Plain text: loss kind (plus ``protected`` flag), intercept, one weight per line."""
    head = model.loss + (" protected" if model.uses_protected else "")
    lines = [head, repr(model.intercept), *(repr(float(v)) for v in model.weights)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path: str | Path) -> LinearModel:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    weights = [float(v) for v in lines[2:] if v.strip()]
    return LinearModel(np.array(weights), float(lines[1]), head[0], "protected" in head[1:])
