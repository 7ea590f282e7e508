import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairsemi.dataset import Dataset
from fairsemi.errors import ConfigError, DataValueError, SchemaError
from fairsemi.learners import LinearModel, TrainConfig, train
from fairsemi.pseudo_label import (
    PseudoConfig,
    augment_with_pseudo_labels,
    build_new_training_set,
    pseudo_label,
    sample_unlabeled,
)


def _pool(n, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, 2)), rng.integers(0, 2, n))


def _labeled(n, seed=1):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    return Dataset(rng.normal(size=(n, 2)) + y[:, None], rng.integers(0, 2, n), y)


class TestSample:
    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(0, 200), rho=st.floats(0, 1), seed=st.integers(0, 10**6))
    def test_size_and_uniqueness(self, n, rho, seed):
        pool = _pool(n)
        s = sample_unlabeled(pool, rho, seed)
        assert s.n_rows == int(np.floor(rho * n))
        assert np.unique(s.row_ids).size == s.n_rows
        assert set(s.row_ids) <= set(pool.row_ids)

    def test_extremes(self):
        pool = _pool(37)
        assert sample_unlabeled(pool, 0.0, 0).n_rows == 0
        assert sorted(sample_unlabeled(pool, 1.0, 0).row_ids) == list(range(37))

    @pytest.mark.parametrize("rho", [-0.1, 1.5])
    def test_bad_rho(self, rho):
        with pytest.raises(ConfigError):
            sample_unlabeled(_pool(10), rho, 0)
        with pytest.raises(ConfigError):
            PseudoConfig(rho=rho)

    def test_rejects_labeled(self):
        with pytest.raises(DataValueError):
            sample_unlabeled(_labeled(10), 0.5, 0)


class TestPseudoLabel:
    def test_labels_follow_model(self):
        # score = x1 - x2
        model = LinearModel(np.array([1.0, -1.0]), 0.0)
        pool = Dataset(np.array([[2.0, 1.0], [0.0, 3.0], [1.0, 1.0]]), [0, 1, 0])
        out = pseudo_label(model, pool)
        assert out.labels.tolist() == [1, 0, 1]
        np.testing.assert_array_equal(out.features, pool.features)
        np.testing.assert_array_equal(out.protected, pool.protected)

    def test_empty(self):
        model = LinearModel(np.array([1.0, -1.0]), 0.0)
        out = pseudo_label(model, _pool(5).subset(np.array([], dtype=int)))
        assert out.n_rows == 0 and out.is_labeled


class TestCombine:
    def test_size_and_order(self):
        tr = _labeled(20)
        pseudo = pseudo_label(LinearModel(np.ones(2), 0.0), _pool(7))
        new = build_new_training_set(tr, pseudo)
        assert new.n_rows == 27
        np.testing.assert_array_equal(new.features[:20], tr.features)
        np.testing.assert_array_equal(new.labels[:20], tr.labels)

    def test_schema_mismatch(self):
        tr = _labeled(4)
        other = Dataset(np.zeros((2, 3)), [0, 1], [0, 1])
        with pytest.raises(SchemaError):
            build_new_training_set(tr, other)

    @pytest.mark.parametrize("rho", [0.0, 0.3, 1.0])
    def test_augment_size(self, rho):
        tr, pool = _labeled(40), _pool(100)
        new, model = augment_with_pseudo_labels(tr, pool, PseudoConfig(rho, 2, TrainConfig(epochs=3)))
        assert new.n_rows == 40 + int(np.floor(rho * 100))
        assert isinstance(model, LinearModel)

    def test_reuses_model(self):
        tr, pool = _labeled(40), _pool(50)
        given_model = train(tr, TrainConfig(epochs=2))
        _, model = augment_with_pseudo_labels(tr, pool, PseudoConfig(0.5), model=given_model)
        assert model is given_model
