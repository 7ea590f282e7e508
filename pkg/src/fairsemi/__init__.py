"""Fairness-enhanced sampling for semi-supervised learning."""
from ._backend import BACKEND
from .dataset import Dataset, GroupKey, SplitSpec, group_counts, partition_groups
from .learners import LinearModel, TrainConfig, predict, train
from .metrics import FairnessReport, accuracy, demographic_parity, discrimination_level

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "GroupKey",
    "SplitSpec",
    "group_counts",
    "partition_groups",
    "LinearModel",
    "TrainConfig",
    "train",
    "predict",
    "FairnessReport",
    "accuracy",
    "demographic_parity",
    "discrimination_level",
]
