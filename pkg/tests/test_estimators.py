import numpy as np
import pytest

from kbahc.errors import ConfigError, NumericError
from kbahc.estimators import (
    CVSpec,
    EqualWeightSpec,
    KBahcSpec,
    SampleSpec,
    cv_eigenvalue_shrinkage,
    estimate_covariance,
    parse_estimators,
)
from kbahc.linalg import eigendecompose, sample_covariance_array


def panel(n, t, seed):
    return np.random.default_rng(seed).standard_normal((n, t))


class TestCvShrinkage:
    def test_trace_preserved(self):
        r = panel(8, 120, 0)
        out = cv_eigenvalue_shrinkage(r)
        assert abs(np.trace(out.values) - np.trace(sample_covariance_array(r))) < 1e-10 * np.trace(out.values)

    def test_eigenvectors_are_sample_eigenvectors(self):
        r = panel(6, 150, 1)
        sample = sample_covariance_array(r)
        es = eigendecompose(sample)
        out = eigendecompose(cv_eigenvalue_shrinkage(r).values)
        # same eigenvector set up to sign and reordering: shrinkage can swap
        # ranks, so the absolute overlap matrix must be a permutation
        overlaps = np.abs(es.eigenvectors.T @ out.eigenvectors)
        assert np.max(np.abs(overlaps.max(axis=0) - 1.0)) < 1e-8
        assert np.max(np.abs(overlaps.max(axis=1) - 1.0)) < 1e-8
        assert abs(overlaps.sum() - 6.0) < 1e-6

    def test_psd(self):
        for seed in range(5):
            r = panel(15, 40, seed)
            vals = np.linalg.eigvalsh(cv_eigenvalue_shrinkage(r).values)
            assert vals[0] >= 0.0

    def test_too_few_observations(self):
        with pytest.raises(NumericError):
            cv_eigenvalue_shrinkage(panel(4, 19, 2), folds=10)

    def test_improves_on_sample_for_identity_truth(self):
        # shrunk eigenvalues should beat raw sample MSE against the true
        # covariance (identity) in nearly all draws
        wins = 0
        trials = 100
        for seed in range(trials):
            r = panel(20, 200, 100 + seed)
            sample = sample_covariance_array(r)
            shrunk = cv_eigenvalue_shrinkage(r).values
            eye = np.eye(20)
            mse_sample = np.mean((sample - eye) ** 2)
            mse_shrunk = np.mean((shrunk - eye) ** 2)
            wins += mse_shrunk < mse_sample
        assert wins >= 90

    def test_deterministic(self):
        r = panel(10, 80, 3)
        a = cv_eigenvalue_shrinkage(r).values
        b = cv_eigenvalue_shrinkage(r).values
        assert np.array_equal(a, b)


class TestSpecs:
    def test_kbahc_label(self):
        assert KBahcSpec(k=3).label == "3-BAHC"
        assert KBahcSpec(k=1, m=50, base_seed=9).plan.m == 50

    def test_sample_and_cv_labels(self):
        assert SampleSpec().label == "Sample"
        assert CVSpec().label == "CV"
        assert EqualWeightSpec().label == "EQ"

    def test_parse_expansion(self):
        specs = parse_estimators(["eq", "sample", "cv", "kbahc"], ks=[1, 2], m=30, base_seed=5, cv_folds=10)
        labels = [s.label for s in specs]
        assert labels == ["EQ", "Sample", "CV", "1-BAHC", "2-BAHC"]

    def test_parse_unknown_name(self):
        with pytest.raises(ConfigError):
            parse_estimators(["nope"], ks=[1], m=10, base_seed=0, cv_folds=10)

    def test_estimate_covariance_dispatch(self):
        r = panel(5, 60, 4)
        sample = estimate_covariance(SampleSpec(), r)
        assert np.array_equal(sample.values, sample_covariance_array(r))
        kb = estimate_covariance(KBahcSpec(k=1, m=10, base_seed=0), r)
        assert np.array_equal(np.diag(kb.values), np.diag(sample.values))

    def test_equal_weight_has_no_covariance(self):
        with pytest.raises(ConfigError):
            estimate_covariance(EqualWeightSpec(), panel(3, 30, 5))
