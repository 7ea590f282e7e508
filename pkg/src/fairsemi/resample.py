"""Fair re-sampling over the four (A, Y) cells, plus the US and PS baselines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GROUP_ORDER, Dataset, partition_groups
from .errors import ConfigError, EmptyGroupError
from .learners import LinearModel, decision_scores

__all__ = [
    "ResampleConfig",
    "fair_resample",
    "make_fair_datasets",
    "min_group_size",
    "uniform_sampling",
    "preferential_sampling",
]


@dataclass(frozen=True)
class ResampleConfig:
    n_s: int
    K: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_s < 1 or self.K < 1:
            raise ConfigError(f"n_s and K must be >= 1 (got n_s={self.n_s}, K={self.K})")


def _nonempty_groups(data: Dataset) -> dict:
    groups = partition_groups(data)
    empty = [k.name for k in GROUP_ORDER if groups[k].size == 0]
    if empty:
        raise EmptyGroupError(f"empty group(s): {', '.join(empty)}")
    return groups


def min_group_size(data: Dataset) -> int:
    """Smallest (A, Y) cell; an empty cell is an error, not a size of 0."""
    return min(g.size for g in _nonempty_groups(data).values())


def _fair_index(groups: dict, n_s: int, rng: np.random.Generator) -> np.ndarray:
    parts = []
    for key in GROUP_ORDER:
        g = groups[key]
        parts.append(rng.choice(g, n_s, replace=g.size < n_s))
    return np.concatenate(parts)


def fair_resample(data: Dataset, n_s: int, seed: int) -> Dataset:
    """Exactly ``n_s`` rows per cell: without replacement when the cell is
    large enough, with replacement otherwise."""
    if n_s < 1:
        raise ConfigError("n_s must be >= 1")
    groups = _nonempty_groups(data)
    return data.subset(_fair_index(groups, n_s, np.random.default_rng(seed)))


def make_fair_datasets(data: Dataset, cfg: ResampleConfig) -> list[Dataset]:
    groups = _nonempty_groups(data)
    return [
        data.subset(_fair_index(groups, cfg.n_s, np.random.default_rng(cfg.seed + k)))
        for k in range(cfg.K)
    ]


def _balanced_size(data: Dataset) -> int:
    return max(1, int(round(data.n_rows / 4)))


def uniform_sampling(data: Dataset, seed: int) -> Dataset:
    """Every cell resized to the average cell size by random over/undersampling."""
    return fair_resample(data, _balanced_size(data), seed)


def preferential_sampling(data: Dataset, ranker: LinearModel, seed: int) -> Dataset:
    """Resize every cell to ``round(N/4)`` using distance to the ranker's boundary.

    Shrinking drops rows with the largest ``|score|``; growing duplicates rows
    with the smallest ``|score|`` first, cycling if needed. Surviving rows
    keep their input order and duplicates are appended after them. ``seed``
    only breaks ties between equal scores.
    """
    groups = _nonempty_groups(data)
    target = _balanced_size(data)
    dist = np.abs(decision_scores(ranker, data))
    tiebreak = np.random.default_rng(seed).random(data.n_rows)
    keep, extra = [], []
    for key in GROUP_ORDER:
        g = groups[key]
        ranked = g[np.lexsort((tiebreak[g], dist[g]))]
        if g.size >= target:
            keep.append(ranked[:target])
        else:
            keep.append(g)
            extra.append(np.resize(ranked, target - g.size))
    kept = np.sort(np.concatenate(keep))
    return data.subset(np.concatenate([kept, *extra]))
