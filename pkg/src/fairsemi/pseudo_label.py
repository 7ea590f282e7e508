"""Pseudo-labeling: grow the training set with model-labeled unlabeled rows."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, concat
from .errors import ConfigError, DataValueError, SchemaError
from .learners import LinearModel, TrainConfig, predict, train

__all__ = [
    "PseudoConfig",
    "sample_unlabeled",
    "pseudo_label",
    "build_new_training_set",
    "augment_with_pseudo_labels",
]


@dataclass(frozen=True)
class PseudoConfig:
    rho: float = 1.0
    seed: int = 0
    learner_cfg: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")


def sample_unlabeled(pool: Dataset, rho: float, seed: int) -> Dataset:
    """Uniform sample without replacement of ``floor(rho * N)`` rows."""
    if pool.is_labeled:
        raise DataValueError("the unlabeled pool must not carry labels")
    if not 0.0 <= rho <= 1.0:
        raise ConfigError(f"rho must lie in [0, 1], got {rho}")
    k = math.floor(rho * pool.n_rows)
    idx = np.random.default_rng(seed).choice(pool.n_rows, k, replace=False)
    return pool.subset(idx)


def pseudo_label(model: LinearModel, sampled: Dataset) -> Dataset:
    if sampled.is_labeled:
        raise DataValueError("pseudo_label expects unlabeled rows")
    if sampled.n_rows == 0:
        return sampled.with_labels(np.zeros(0, dtype=np.int64))
    return sampled.with_labels(predict(model, sampled))


def build_new_training_set(train_set: Dataset, pseudo: Dataset) -> Dataset:
    """Original rows first, then pseudo-labeled rows."""
    if train_set.feature_names != pseudo.feature_names:
        raise SchemaError("training and pseudo-labeled sets have different feature schemas")
    if pseudo.n_rows == 0:
        return train_set
    return concat([train_set, pseudo])


def augment_with_pseudo_labels(
    train_set: Dataset, pool: Dataset, cfg: PseudoConfig, model: LinearModel | None = None
) -> tuple[Dataset, LinearModel]:
    """Sample the pool, label it with a model fit on ``train_set``, and combine.

    Returns the new training set and the labeling model (reusable as the
    supervised baseline).
    """
    if model is None:
        model = train(train_set, cfg.learner_cfg)
    sampled = sample_unlabeled(pool, cfg.rho, cfg.seed)
    return build_new_training_set(train_set, pseudo_label(model, sampled)), model
