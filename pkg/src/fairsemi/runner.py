"""Experiment orchestration: data preparation, method pipelines, repeats and sweeps."""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, IngestionSchema, SplitSpec, load_csv, split_train_test
from .decompose import (
    DecompositionReport,
    PseudoNoise,
    Theorem1Check,
    bootstrap_source,
    check_theorem1,
    decompose_points,
    estimate_main_prediction,
    group_decomposition,
    linear_trainer,
    noise_from_posterior,
    pseudo_noise_discrimination,
)
from .ensemble import EnsembleModel, ensemble_predict, train_ensemble
from .errors import ConfigError, FairSemiError
from .learners import MODEL_LOSS, LinearModel, TrainConfig, predict, train
from .metrics import FairnessReport, evaluate
from .pseudo_label import PseudoConfig, augment_with_pseudo_labels
from .resample import (
    ResampleConfig,
    make_fair_datasets,
    min_group_size,
    preferential_sampling,
    uniform_sampling,
)
from .synthetic import (
    DA1_GPP_KEEP,
    DA2_GPP_KEEP,
    GaussianSpec,
    bayes_optimal_labels,
    build_scenario,
    class_posterior,
)

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "SWEEP_AXES",
    "REPORT_HEADER",
    "ExperimentConfig",
    "ExperimentData",
    "RunOutcome",
    "AggregateReport",
    "SweepRow",
    "load_config",
    "prepare_data",
    "execute",
    "run_once",
    "run_repeated",
    "sweep",
    "compare_methods",
    "decompose_experiment",
    "write_report_csv",
    "write_sweep_csv",
    "plot_sweep",
]

METHODS = ("ORI", "US", "PS", "FS")
SWEEP_AXES = {"rho": "rho", "K": "K", "ns": "n_s", "n_s": "n_s", "n": "n"}
SCENARIOS = {"DA1": DA1_GPP_KEEP, "DA2": DA2_GPP_KEEP}
REPORT_HEADER = (
    "run_id,method,model,rho,K,n_s,acc_mean,acc_std,dis_mean,dis_std,gpp,gup,gpn,gun".split(",")
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``n_s=None`` means the smallest cell of the new training
    set; ``n=None`` keeps the whole original training split."""

    source: str = "synthetic"
    # synthetic source
    gpp_keep: int | None = DA2_GPP_KEEP
    test_set: str = "fair"
    n_total: int = 22000
    # csv source
    path: str | None = None
    unlabeled_path: str | None = None
    labeled_fraction: float = 0.5
    schema: IngestionSchema | None = None
    # method
    method: str = "FS"
    rho: float = 1.0
    K: int = 200
    n_s: int | None = None
    # learner
    model: str = "logreg"
    include_protected: bool = False
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 64
    l2: float = 1e-4
    # experiment
    split_rate: float = 0.8
    repeats: int = 50
    n: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.source not in ("synthetic", "csv"):
            raise ConfigError(f"source must be 'synthetic' or 'csv', got {self.source!r}")
        if self.source == "csv" and (self.path is None or self.schema is None):
            raise ConfigError("csv source needs a path and ingestion keys")
        if self.test_set not in ("fair", "discriminatory"):
            raise ConfigError("test_set must be 'fair' or 'discriminatory'")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.model not in MODEL_LOSS:
            raise ConfigError(f"model must be one of {tuple(MODEL_LOSS)}, got {self.model!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [0, 1]")
        if self.K < 1 or self.repeats < 1:
            raise ConfigError("K and repeats must be >= 1")
        if self.n_s is not None and self.n_s < 1:
            raise ConfigError("n_s must be >= 1")
        if self.n is not None and self.n < 2:
            raise ConfigError("n must be >= 2")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ConfigError("labeled_fraction must lie in (0, 1]")
        SplitSpec(self.split_rate)

    def learner(self, seed: int = 0) -> TrainConfig:
        return TrainConfig(
            loss=MODEL_LOSS[self.model],
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            l2=self.l2,
            seed=seed,
            include_protected=self.include_protected,
        )

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_SECTIONS = {
    "dataset": {"source", "scenario", "gpp_keep", "test_set", "n_total", "path",
                "unlabeled_path", "labeled_fraction", *IngestionSchema.KEYS},
    "method": {"method", "rho", "K", "n_s"},
    "learner": {"model", "include_protected", "learning_rate", "epochs", "batch_size", "l2"},
    "experiment": {"split_rate", "repeats", "n", "seed"},
}
_INT = {"gpp_keep", "n_total", "K", "n_s", "epochs", "batch_size", "repeats", "n", "seed"}
_FLOAT = {"labeled_fraction", "rho", "learning_rate", "l2", "split_rate"}
_NONE = ("", "none", "auto", "auto-min", "all")


def _parse_bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse an INI config with [dataset], [method], [learner], [experiment]."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"config file not found: {path}")
    kw: dict = {}
    ingestion: dict = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if key in IngestionSchema.KEYS:
                ingestion[key] = raw
                continue
            value = raw.strip()
            try:
                if key == "scenario":
                    if value not in SCENARIOS and value != "fair":
                        raise ConfigError(f"scenario must be DA1, DA2 or fair, got {value!r}")
                    kw["gpp_keep"] = SCENARIOS.get(value)
                elif key in ("gpp_keep", "n_s", "n") and value.lower() in _NONE:
                    kw[key] = None
                elif key in _INT:
                    kw[key] = int(value)
                elif key in _FLOAT:
                    kw[key] = float(value)
                elif key == "include_protected":
                    kw[key] = _parse_bool(value)
                else:
                    kw[key] = value
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    if ingestion:
        kw["schema"] = IngestionSchema.from_mapping(ingestion)
    return ExperimentConfig(**kw)


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentData:
    train: Dataset
    unlabeled: Dataset
    test: Dataset
    unlabeled_truth: np.ndarray | None = None


def _seeds(seed: int, n: int) -> list[int]:
    return [int(c.generate_state(1, np.uint64)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


@lru_cache(maxsize=8)
def _load_cached(path: str, schema: IngestionSchema) -> Dataset:
    return load_csv(path, schema)


def prepare_data(cfg: ExperimentConfig, seed: int) -> ExperimentData:
    """Deterministic in ``(cfg data fields, seed)``; never depends on the method."""
    s_data, s_sub = _seeds(seed, 2)
    if cfg.source == "synthetic":
        sc = build_scenario(GaussianSpec(n_total=cfg.n_total), cfg.gpp_keep, s_data)
        test = sc.fair_test if cfg.test_set == "fair" else sc.disc_test
        data = ExperimentData(sc.train, sc.unlabeled, test, sc.unlabeled_truth)
    else:
        data = _prepare_csv(cfg, s_data)
    if cfg.n is not None and cfg.n < data.train.n_rows:
        idx = np.random.default_rng(s_sub).permutation(data.train.n_rows)[: cfg.n]
        data = replace(data, train=data.train.subset(np.sort(idx)))
    return data


def _prepare_csv(cfg: ExperimentConfig, seed: int) -> ExperimentData:
    s_half, s_split = _seeds(seed, 2)
    full = _load_cached(cfg.path, cfg.schema)
    if cfg.unlabeled_path:
        schema = replace(cfg.schema, label_column=None)
        pool = _load_cached(cfg.unlabeled_path, schema)
        if pool.feature_names != full.feature_names:
            raise ConfigError("labeled and unlabeled files encode to different feature columns")
        # disjoint provenance ids for rows from the second file
        pool = Dataset(pool.features, pool.protected, None, pool.feature_names,
                       pool.row_ids + full.row_ids.max() + 1)
        labeled, truth = full, None
    else:
        perm = np.random.default_rng(s_half).permutation(full.n_rows)
        cut = math.floor(cfg.labeled_fraction * full.n_rows)
        labeled = full.subset(perm[:cut])
        hidden = full.subset(perm[cut:])
        pool, truth = hidden.without_labels(), hidden.labels
    train_set, test = split_train_test(labeled, SplitSpec(cfg.split_rate, s_split))
    return ExperimentData(train_set, pool, test, truth)


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunOutcome:
    report: FairnessReport
    test_ids: np.ndarray
    training_ids: np.ndarray
    n_s: int | None = None
    pseudo_noise: PseudoNoise | None = None
    model: LinearModel | EnsembleModel | None = field(default=None, repr=False)

    @property
    def test_fingerprint(self) -> str:
        return hashlib.sha256(np.sort(self.test_ids).tobytes()).hexdigest()[:16]


def execute(cfg: ExperimentConfig, seed: int, workers: int = 1) -> RunOutcome:
    """Run one pipeline end to end and keep audit information."""
    data = prepare_data(cfg, seed)
    s_learn, s_pseudo, s_resample, s_ens = _seeds(seed + 1, 4)
    lcfg = cfg.learner(s_learn)
    train_set = data.train
    n_s_used = None
    pseudo_noise = None

    base = train(train_set, lcfg)
    if cfg.method == "ORI":
        model = base
        pred = predict(model, data.test)
        used = train_set.row_ids
    elif cfg.method in ("US", "PS"):
        if cfg.method == "US":
            resampled = uniform_sampling(train_set, s_resample)
        else:
            resampled = preferential_sampling(train_set, base, s_resample)
        model = train(resampled, lcfg)
        pred = predict(model, data.test)
        used = resampled.row_ids
    else:
        pcfg = PseudoConfig(cfg.rho, s_pseudo, lcfg)
        d_new, _ = augment_with_pseudo_labels(train_set, data.unlabeled, pcfg, model=base)
        if data.unlabeled_truth is not None and d_new.n_rows > train_set.n_rows:
            pseudo_noise = _pseudo_noise_of(d_new, train_set.n_rows, data)
        n_s_used = cfg.n_s if cfg.n_s is not None else min_group_size(d_new)
        fair_sets = make_fair_datasets(d_new, ResampleConfig(n_s_used, cfg.K, s_resample))
        model = train_ensemble(fair_sets, lcfg.with_seed(s_ens), workers=workers)
        pred = ensemble_predict(model, data.test)
        used = d_new.row_ids
    report = evaluate(pred, data.test.require_labels(), data.test.protected)
    return RunOutcome(report, data.test.row_ids, np.unique(used), n_s_used, pseudo_noise, model)


def _pseudo_noise_of(d_new: Dataset, n_orig: int, data: ExperimentData) -> PseudoNoise | None:
    pseudo = d_new.subset(np.arange(n_orig, d_new.n_rows))
    pos = {rid: i for i, rid in enumerate(data.unlabeled.row_ids)}
    truth = data.unlabeled_truth[[pos[r] for r in pseudo.row_ids]]
    try:
        return pseudo_noise_discrimination(truth, pseudo.labels, pseudo.protected)
    except FairSemiError:
        return None


def run_once(cfg: ExperimentConfig, seed: int) -> FairnessReport:
    return execute(cfg, seed).report


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregateReport:
    acc_mean: float
    acc_std: float
    dis_mean: float
    dis_std: float
    group_counts_mean: tuple[float, float, float, float]
    runs: tuple[FairnessReport, ...] = field(repr=False)

    @classmethod
    def from_runs(cls, runs: Sequence[FairnessReport]) -> "AggregateReport":
        acc = np.array([r.accuracy for r in runs])
        dis = np.array([r.discrimination for r in runs])
        counts = np.array([r.group_pred_counts for r in runs], dtype=np.float64).mean(axis=0)
        return cls(float(acc.mean()), float(acc.std()), float(dis.mean()), float(dis.std()),
                   tuple(float(c) for c in counts), tuple(runs))


def _job(args) -> FairnessReport:
    cfg, seed, r = args
    try:
        return run_once(cfg, seed)
    except FairSemiError as exc:
        raise type(exc)(f"repeat {r} (seed {seed}): {exc}") from exc


def _run_jobs(jobs: list, workers: int) -> list[FairnessReport]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_job, jobs))
    return [_job(j) for j in jobs]


def run_repeated(cfg: ExperimentConfig, repeats: int | None = None, workers: int = 1) -> AggregateReport:
    """Independent runs with seeds ``cfg.seed + r``; std is the population std."""
    repeats = cfg.repeats if repeats is None else repeats
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    jobs = [(cfg, cfg.seed + r, r) for r in range(repeats)]
    try:
        runs = _run_jobs(jobs, workers)
    except FairSemiError as exc:
        raise type(exc)(f"[config {cfg.fingerprint()}] {exc}") from exc
    return AggregateReport.from_runs(runs)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: object
    config: ExperimentConfig
    result: AggregateReport | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _with_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {sorted(set(SWEEP_AXES))}, got {axis!r}")
    fld = SWEEP_AXES[axis]
    if fld == "rho":
        value = float(value)
    elif value is not None:
        value = int(value)
    return replace(cfg, **{fld: value})


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence, workers: int = 1) -> list[SweepRow]:
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for v in values:
        try:
            c = _with_axis(cfg, axis, v)
            rows.append(SweepRow(axis, v, c, run_repeated(c, workers=workers)))
        except FairSemiError as exc:
            log.error("sweep %s=%s failed [config %s]: %s", axis, v, cfg.fingerprint(), exc)
            rows.append(SweepRow(axis, v, cfg, None, str(exc)))
    return rows


def compare_methods(cfg: ExperimentConfig, methods: Sequence[str] = METHODS, workers: int = 1) -> list[SweepRow]:
    """Same seeds (hence the same splits and test rows) for every method."""
    rows = []
    for m in methods:
        try:
            c = replace(cfg, method=m)
            rows.append(SweepRow("method", m, c, run_repeated(c, workers=workers)))
        except FairSemiError as exc:
            log.error("method %s failed [config %s]: %s", m, cfg.fingerprint(), exc)
            rows.append(SweepRow("method", m, cfg, None, str(exc)))
    return rows


# ---------------------------------------------------------------------------
# decomposition experiment (synthetic only)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionOutcome:
    supervised: DecompositionReport
    semi_supervised: DecompositionReport
    pseudo_noise: PseudoNoise
    theorem1: Theorem1Check


def decompose_experiment(
    cfg: ExperimentConfig, seed: int, trials: int = 50, n_eval: int | None = None
) -> DecompositionOutcome:
    """Supervised (ORI) vs FS decomposition on the configured synthetic test set.

    Noise uses the exact class posterior of each evaluation point.
    """
    if cfg.source != "synthetic":
        raise ConfigError("the decomposition needs known optimal labels: synthetic source only")
    spec = GaussianSpec(n_total=cfg.n_total)
    data = prepare_data(cfg, seed)
    points = data.test if n_eval is None else data.test.subset(np.arange(min(n_eval, data.test.n_rows)))
    y_star = bayes_optimal_labels(points.features, spec)
    noise = noise_from_posterior(class_posterior(points.features, spec), y_star)
    lcfg = cfg.learner(seed)

    def fs_trainer(train_set: Dataset, s: int):
        s_learn, s_pseudo, s_res, s_ens = _seeds(s, 4)
        d_new, _ = augment_with_pseudo_labels(
            train_set, data.unlabeled, PseudoConfig(cfg.rho, s_pseudo, lcfg.with_seed(s_learn))
        )
        n_s = cfg.n_s if cfg.n_s is not None else min_group_size(d_new)
        sets = make_fair_datasets(d_new, ResampleConfig(n_s, cfg.K, s_res))
        return train_ensemble(sets, lcfg.with_seed(s_ens))

    source = bootstrap_source(data.train)
    reports = []
    for trainer in (linear_trainer(lcfg), fs_trainer):
        main = estimate_main_prediction(trainer, source, points, trials, seed)
        reports.append(group_decomposition(points, decompose_points(y_star, main, noise=noise), trials))

    s_learn, s_pseudo = _seeds(seed, 2)
    d_new, _ = augment_with_pseudo_labels(
        data.train, data.unlabeled, PseudoConfig(cfg.rho, s_pseudo, lcfg.with_seed(s_learn))
    )
    pn = _pseudo_noise_of(d_new, data.train.n_rows, data)
    if pn is None:
        raise ConfigError("pseudo-noise cells undefined (rho too small or a cell is empty)")
    sl = replace(reports[0], pseudo_noise=None)
    ssl = replace(reports[1], pseudo_noise=pn)
    return DecompositionOutcome(sl, ssl, pn, check_theorem1(sl, ssl, pn.nap))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def write_report_csv(rows: Sequence[SweepRow], path: str | Path, run_prefix: str = "run") -> None:
    """``report.csv`` with the fixed header; failed rows carry ``nan`` metrics."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for i, row in enumerate(rows):
            c = row.config
            fs = c.method == "FS"
            run_id = f"{run_prefix}-{i:03d}" if row.ok else f"{run_prefix}-{i:03d}-failed"
            ns = ("auto-min" if c.n_s is None else c.n_s) if fs else None
            if row.ok:
                r = row.result
                metrics = [r.acc_mean, r.acc_std, r.dis_mean, r.dis_std, *r.group_counts_mean]
            else:
                metrics = [float("nan")] * 8
            fields = (run_id, c.method, c.model, c.rho if fs else None, c.K if fs else None, ns, *metrics)
            w.writerow([_fmt(v) for v in fields])


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis_value", "acc_mean", "acc_std", "dis_mean", "dis_std", "status"])
        for row in rows:
            if row.ok:
                r = row.result
                w.writerow([_fmt(row.value), *(_fmt(v) for v in (r.acc_mean, r.acc_std, r.dis_mean, r.dis_std)), "ok"])
            else:
                w.writerow([_fmt(row.value), "nan", "nan", "nan", "nan", "failed"])


def plot_sweep(rows: Sequence[SweepRow], path: str | Path, axis_label: str | None = None) -> None:
    """Accuracy (red) and discrimination (blue) against the swept value, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in rows if r.ok]
    x = [float(r.value) for r in ok]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(x, [r.result.acc_mean for r in ok], yerr=[r.result.acc_std for r in ok],
                color="tab:red", marker="o", label="accuracy")
    ax.errorbar(x, [r.result.dis_mean for r in ok], yerr=[r.result.dis_std for r in ok],
                color="tab:blue", marker="s", label="discrimination")
    ax.set_xlabel(axis_label or (rows[0].axis if rows else ""))
    ax.set_ylim(bottom=0)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
