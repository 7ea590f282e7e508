"""Bagged base models on fair datasets combined by majority vote."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import DataValueError, FairSemiError, ShapeError, TrainingError
from .learners import LinearModel, TrainConfig, load_model, predict, save_model, train

__all__ = [
    "EnsembleModel",
    "train_ensemble",
    "majority_vote",
    "member_predictions",
    "ensemble_predict",
    "save_ensemble",
    "load_ensemble",
]


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple[LinearModel, ...]
    tie_label: int = 0

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DataValueError("an ensemble needs at least one member")
        dims = {(m.n_inputs, m.uses_protected) for m in members}
        if len(dims) != 1:
            raise ShapeError("ensemble members disagree on input dimension")
        if self.tie_label not in (0, 1):
            raise DataValueError("tie_label must be 0 or 1")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)


def train_ensemble(
    fair_sets: Sequence[Dataset], cfg: TrainConfig, workers: int = 1, tie_label: int = 0
) -> EnsembleModel:
    """Member ``k`` is trained on ``fair_sets[k]`` with seed ``cfg.seed + k``.

    With ``workers > 1`` members train on a thread pool (the compiled kernel
    releases the GIL); results do not depend on scheduling.
    """
    if not fair_sets:
        raise DataValueError("no fair datasets to train on")

    def fit(k):
        try:
            return train(fair_sets[k], cfg.with_seed(cfg.seed + k))
        except FairSemiError as exc:
            raise TrainingError(f"ensemble member {k} failed: {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            members = list(pool.map(fit, range(len(fair_sets))))
    else:
        members = [fit(k) for k in range(len(fair_sets))]
    return EnsembleModel(tuple(members), tie_label)


def majority_vote(votes, tie_label: int = 0) -> int:
    votes = np.asarray(votes)
    if votes.size == 0:
        raise DataValueError("cannot take a majority of zero votes")
    ones = int(np.count_nonzero(votes == 1))
    zeros = votes.size - ones
    if ones == zeros:
        return tie_label
    return int(ones > zeros)


def member_predictions(model: EnsembleModel, data: Dataset) -> np.ndarray:
    """(K, N) matrix of member labels."""
    return np.vstack([predict(m, data) for m in model.members])


def ensemble_predict(model: EnsembleModel, data: Dataset) -> np.ndarray:
    votes = member_predictions(model, data)
    ones = votes.sum(axis=0)
    k = votes.shape[0]
    out = (2 * ones > k).astype(np.int64)
    out[2 * ones == k] = model.tie_label
    return out


def save_ensemble(model: EnsembleModel, directory: str | Path) -> None:
    """One text file per member plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for k, member in enumerate(model.members):
        name = f"member_{k:04d}.txt"
        save_model(member, directory / name)
        files.append(name)
    manifest = {"tie_label": model.tie_label, "members": files}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_ensemble(directory: str | Path) -> EnsembleModel:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    members = tuple(load_model(directory / name) for name in manifest["members"])
    return EnsembleModel(members, manifest["tie_label"])
