import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from fairsemi.dataset import group_counts
from fairsemi.errors import SizeError, SpecError
from fairsemi.synthetic import (
    DA1_GPP_KEEP,
    DA2_GPP_KEEP,
    GaussianSpec,
    bayes_optimal_label,
    bayes_optimal_labels,
    build_scenario,
    class_posterior,
    draw_fair_test,
    generate_synthetic,
    make_discriminatory,
    sample_labels,
)

SPEC = GaussianSpec()


def _scipy_label(x):
    pos = multivariate_normal([2, 2], [[5, 1], [1, 5]]).logpdf(x)
    neg = multivariate_normal([-2, -2], [[10, 1], [1, 3]]).logpdf(x)
    return int(pos >= neg)


@pytest.fixture(scope="module")
def data():
    return generate_synthetic(SPEC, 7)


@pytest.fixture(scope="module")
def scen():
    return build_scenario(SPEC, DA1_GPP_KEEP, 11)


class TestSpec:
    def test_defaults(self):
        np.testing.assert_array_equal(SPEC.params(1)[0], [2, 2])
        np.testing.assert_array_equal(SPEC.params(0)[1], [[10, 1], [1, 3]])
        assert SPEC.n_total == 22000

    def test_not_positive_definite(self):
        with pytest.raises(SpecError):
            GaussianSpec(cov_pos=((1.0, 2.0), (2.0, 1.0)))

    def test_asymmetric(self):
        with pytest.raises(SpecError):
            GaussianSpec(cov_neg=((1.0, 0.5), (0.0, 1.0)))

    def test_scenario_constants(self):
        assert (DA1_GPP_KEEP, DA2_GPP_KEEP) == (2000, 1500)


class TestGenerate:
    def test_shape_and_names(self, data):
        assert data.features.shape == (22000, 2)
        assert data.feature_names == ("x1", "x2")

    def test_class_moments(self, data):
        for label in (0, 1):
            mean, cov, _ = SPEC.params(label)
            X = data.features[data.labels == label]
            np.testing.assert_allclose(X.mean(axis=0), mean, atol=0.1)
            np.testing.assert_allclose(np.cov(X.T), cov, atol=0.35)

    def test_balanced_cells(self, data):
        # fair coins: each cell near 22000 / 4
        for c in group_counts(data):
            assert abs(c - 5500) < 300

    def test_protected_independent_of_x(self, data):
        for a in (0, 1):
            X = data.features[(data.protected == a) & (data.labels == 1)]
            np.testing.assert_allclose(X.mean(axis=0), [2, 2], atol=0.15)

    def test_deterministic(self):
        a = generate_synthetic(GaussianSpec(n_total=50), 3)
        b = generate_synthetic(GaussianSpec(n_total=50), 3)
        np.testing.assert_array_equal(a.features, b.features)


class TestDiscriminatory:
    def test_keeps_exactly(self):
        full = generate_synthetic(SPEC, 1)
        da = make_discriminatory(full, 3000, 2)
        before, after = group_counts(full), group_counts(da)
        assert after[0] == 3000
        assert after[1:] == before[1:]

    def test_preserves_order(self):
        full = generate_synthetic(GaussianSpec(n_total=400), 1)
        da = make_discriminatory(full, 10, 2)
        assert np.all(np.diff(da.row_ids) > 0)

    def test_too_many(self):
        full = generate_synthetic(GaussianSpec(n_total=40), 1)
        with pytest.raises(SizeError):
            make_discriminatory(full, 1000, 0)


class TestFairTest:
    def test_stratified(self):
        full = generate_synthetic(SPEC, 4)
        test, rest = draw_fair_test(full, 2000, 5)
        assert group_counts(test) == (500, 500, 500, 500)
        assert rest.n_rows == full.n_rows - 2000
        assert not set(test.row_ids) & set(rest.row_ids)

    def test_too_small(self):
        full = generate_synthetic(GaussianSpec(n_total=40), 1)
        with pytest.raises(SizeError):
            draw_fair_test(full, 2000, 0)


class TestScenario:
    def test_disjoint(self, scen):
        parts = [scen.train, scen.unlabeled, scen.fair_test, scen.disc_test]
        ids = np.concatenate([p.row_ids for p in parts])
        assert np.unique(ids).size == ids.size

    def test_unlabeled_has_no_labels(self, scen):
        assert not scen.unlabeled.is_labeled
        assert scen.unlabeled_truth.shape == (scen.unlabeled.n_rows,)

    def test_gpp_reduced(self, scen):
        total = sum(group_counts(d)[0] for d in (scen.train, scen.disc_test)) + int(
            np.count_nonzero((scen.unlabeled.protected == 1) & (scen.unlabeled_truth == 1)))
        assert total == DA1_GPP_KEEP

    def test_fair_test_balanced(self, scen):
        assert group_counts(scen.fair_test) == (500, 500, 500, 500)

    def test_disc_test_biased(self, scen):
        pp, up, _, _ = group_counts(scen.disc_test)
        assert pp < up / 2


class TestBayesOracle:
    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        X = rng.normal(scale=4.0, size=(300, 2))
        ours = bayes_optimal_labels(X, SPEC)
        ref = np.array([_scipy_label(x) for x in X])
        np.testing.assert_array_equal(ours, ref)

    def test_posterior_matches_scipy(self):
        X = np.array([[0.0, 0.0], [3.0, -1.0], [-5.0, 2.0]])
        pos = multivariate_normal([2, 2], [[5, 1], [1, 5]]).pdf(X)
        neg = multivariate_normal([-2, -2], [[10, 1], [1, 3]]).pdf(X)
        np.testing.assert_allclose(class_posterior(X, SPEC), pos / (pos + neg), rtol=1e-10)

    def test_class_means(self):
        assert bayes_optimal_label([2, 2], SPEC) == 1
        assert bayes_optimal_label([-2, -2], SPEC) == 0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-15, 15), st.floats(-15, 15))
    def test_single_point(self, x1, x2):
        assert bayes_optimal_label([x1, x2], SPEC) == _scipy_label([x1, x2])

    def test_sample_labels_rate(self):
        X = np.array([[0.5, 0.5]])
        p = class_posterior(X, SPEC)[0]
        draws = sample_labels(X, SPEC, 20000, np.random.default_rng(0))
        assert draws.shape == (20000, 1)
        assert abs(draws.mean() - p) < 0.015
