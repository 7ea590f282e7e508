"""Two-Gaussian synthetic data, discriminatory variants and the Bayes label oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import GPP, GROUP_ORDER, Dataset, partition_groups
from .errors import SizeError, SpecError

__all__ = [
    "GaussianSpec",
    "SyntheticScenario",
    "DA1_GPP_KEEP",
    "DA2_GPP_KEEP",
    "generate_synthetic",
    "make_discriminatory",
    "draw_fair_test",
    "build_scenario",
    "class_log_ratio",
    "class_posterior",
    "bayes_optimal_labels",
    "bayes_optimal_label",
    "sample_labels",
]

DA1_GPP_KEEP = 2000
# 1500, not 3000: see README "Synthetic scenarios".
DA2_GPP_KEEP = 1500


def _mat(v) -> np.ndarray:
    return np.array(v, dtype=np.float64)


@dataclass(frozen=True)
class GaussianSpec:
    mean_pos: tuple = (2.0, 2.0)
    cov_pos: tuple = ((5.0, 1.0), (1.0, 5.0))
    mean_neg: tuple = (-2.0, -2.0)
    cov_neg: tuple = ((10.0, 1.0), (1.0, 3.0))
    n_total: int = 22000
    _chol: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for which in ("pos", "neg"):
            mean = _mat(getattr(self, f"mean_{which}"))
            cov = _mat(getattr(self, f"cov_{which}"))
            if mean.shape != (2,) or cov.shape != (2, 2):
                raise SpecError(f"{which}: need a 2-vector mean and 2x2 covariance")
            if not np.allclose(cov, cov.T):
                raise SpecError(f"cov_{which} is not symmetric")
            try:
                self._chol[which] = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise SpecError(f"cov_{which} is not positive definite") from None
        if self.n_total < 1:
            raise SpecError("n_total must be positive")

    def params(self, label: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        which = "pos" if label == 1 else "neg"
        return _mat(getattr(self, f"mean_{which}")), _mat(getattr(self, f"cov_{which}")), self._chol[which]


def generate_synthetic(spec: GaussianSpec, seed: int) -> Dataset:
    """Labels and protected attribute i.i.d. fair coins; x | y Gaussian."""
    rng = np.random.default_rng(seed)
    n = spec.n_total
    y = rng.integers(0, 2, n)
    a = rng.integers(0, 2, n)
    z = rng.standard_normal((n, 2))
    X = np.empty((n, 2))
    for label in (0, 1):
        mean, _, chol = spec.params(label)
        m = y == label
        X[m] = mean + z[m] @ chol.T
    return Dataset(X, a, y, ("x1", "x2"))


def make_discriminatory(data: Dataset, gpp_keep: int, seed: int) -> Dataset:
    """Keep a uniform random subset of ``gpp_keep`` G_PP rows; others untouched.

    Row order of the survivors is preserved.
    """
    groups = partition_groups(data)
    pp = groups[GPP]
    if gpp_keep < 0 or gpp_keep > pp.size:
        raise SizeError(f"cannot keep {gpp_keep} of {pp.size} G_PP rows")
    rng = np.random.default_rng(seed)
    keep = np.ones(data.n_rows, dtype=bool)
    keep[pp] = False
    keep[rng.choice(pp, gpp_keep, replace=False)] = True
    return data.subset(np.flatnonzero(keep))


def draw_fair_test(data: Dataset, size: int, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified draw with ``size // 4`` rows from every (A, Y) cell.

    Returns ``(test, remainder)``.
    """
    per = size // 4
    groups = partition_groups(data)
    rng = np.random.default_rng(seed)
    picked = []
    for key in GROUP_ORDER:
        g = groups[key]
        if g.size < per:
            raise SizeError(f"{key.name} has {g.size} rows, fair test needs {per}")
        picked.append(rng.choice(g, per, replace=False))
    test_idx = rng.permutation(np.concatenate(picked))
    mask = np.ones(data.n_rows, dtype=bool)
    mask[test_idx] = False
    return data.subset(test_idx), data.subset(np.flatnonzero(mask))


@dataclass(frozen=True)
class SyntheticScenario:
    """Everything one synthetic experiment needs.

    ``unlabeled`` carries no labels; ``unlabeled_truth`` holds the hidden
    generator labels for noise analysis only.
    """

    train: Dataset
    unlabeled: Dataset
    unlabeled_truth: np.ndarray
    fair_test: Dataset
    disc_test: Dataset


def build_scenario(
    spec: GaussianSpec,
    gpp_keep: int | None,
    seed: int,
    fair_test_size: int = 2000,
    disc_test_size: int = 2000,
) -> SyntheticScenario:
    """Fair test first, then the discriminatory set, its test set, and the
    labeled/unlabeled halves of what remains.

    ``gpp_keep=None`` skips the G_PP reduction (the undistorted data).
    """
    ss = np.random.SeedSequence(seed)
    s_gen, s_fair, s_da, s_split = (int(c.generate_state(1)[0]) for c in ss.spawn(4))
    full = generate_synthetic(spec, s_gen)
    fair_test, rest = draw_fair_test(full, fair_test_size, s_fair)
    da = rest if gpp_keep is None else make_discriminatory(rest, gpp_keep, s_da)
    perm = np.random.default_rng(s_split).permutation(da.n_rows)
    if disc_test_size >= da.n_rows - 1:
        raise SizeError("discriminatory test set would consume the whole dataset")
    disc_test = da.subset(perm[:disc_test_size])
    remaining = perm[disc_test_size:]
    half = remaining.size // 2
    train = da.subset(remaining[:half])
    pool = da.subset(remaining[half:])
    return SyntheticScenario(train, pool.without_labels(), pool.labels, fair_test, disc_test)


def class_log_ratio(X, spec: GaussianSpec) -> np.ndarray:
    """log p(x | y=1) - log p(x | y=0) for each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.zeros(X.shape[0])
    for label, sign in ((1, 1.0), (0, -1.0)):
        mean, _, chol = spec.params(label)
        z = np.linalg.solve(chol, (X - mean).T)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out += sign * (-0.5 * np.sum(z * z, axis=0) - 0.5 * logdet)
    return out


def class_posterior(X, spec: GaussianSpec) -> np.ndarray:
    """P(y=1 | x) under equal class priors."""
    return np.exp(-np.logaddexp(0.0, -class_log_ratio(X, spec)))


def bayes_optimal_labels(X, spec: GaussianSpec) -> np.ndarray:
    return (class_log_ratio(X, spec) >= 0).astype(np.int64)


def bayes_optimal_label(x, spec: GaussianSpec) -> int:
    return int(bayes_optimal_labels(np.asarray(x, dtype=np.float64).reshape(1, 2), spec)[0])


def sample_labels(X, spec: GaussianSpec, draws: int, rng: np.random.Generator) -> np.ndarray:
    """``draws`` independent labels per row from the class posterior, shape (draws, n)."""
    p = class_posterior(X, spec)
    return (rng.random((draws, p.size)) < p).astype(np.int64)
