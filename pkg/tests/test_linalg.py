import numpy as np
import pytest

from kbahc.errors import DegenerateAssetError
from kbahc.linalg import (
    SymmetricMatrix,
    clip_negative_eigenvalues,
    clip_negative_eigenvalues_array,
    correlation_array,
    eigendecompose,
    load_matrix_csv,
    sample_covariance,
    sample_covariance_array,
    save_matrix_csv,
    to_correlation,
    to_covariance,
)


class TestSampleCovariance:
    def test_two_asset_example(self):
        r = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        cov = sample_covariance_array(r)
        expected = np.array([[2.0 / 3.0, 4.0 / 3.0], [4.0 / 3.0, 8.0 / 3.0]])
        assert np.max(np.abs(cov - expected)) < 1e-15

    def test_single_asset_divisor(self):
        # (0, 1): mean 0.5, squared deviations 0.25 each, divisor t=2
        cov = sample_covariance_array(np.array([[0.0, 1.0]]))
        assert cov[0, 0] == pytest.approx(0.25, abs=1e-16)

    def test_constant_row_zero_variance(self):
        cov = sample_covariance_array(np.array([[3.0, 3.0, 3.0], [1.0, 2.0, 0.0]]))
        assert cov[0, 0] == 0.0
        assert cov[0, 1] == 0.0

    def test_too_few_observations(self):
        with pytest.raises(ValueError):
            sample_covariance_array(np.array([[1.0]]))

    def test_mean_shift_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            r = rng.standard_normal((4, 30))
            shift = rng.standard_normal((4, 1)) * 10
            a = sample_covariance_array(r)
            b = sample_covariance_array(r + shift)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_symmetry_exact(self):
        r = np.random.default_rng(9).standard_normal((6, 40))
        cov = sample_covariance_array(r)
        assert np.array_equal(cov, cov.T)

    def test_wrapper_role_and_labels(self):
        r = np.random.default_rng(2).standard_normal((3, 20))
        m = sample_covariance(r, labels=("a", "b", "c"))
        assert m.role == "covariance"
        assert m.labels == ("a", "b", "c")


class TestCorrelationConversion:
    def test_collinear_rows(self):
        cov = np.array([[2.0 / 3.0, 4.0 / 3.0], [4.0 / 3.0, 8.0 / 3.0]])
        corr = correlation_array(cov)
        assert np.max(np.abs(corr - np.ones((2, 2)))) < 1e-12
        assert corr[0, 0] == 1.0 and corr[1, 1] == 1.0

    def test_diagonal_becomes_identity(self):
        corr = correlation_array(np.diag([4.0, 9.0, 0.25]))
        assert np.array_equal(corr, np.eye(3))

    def test_zero_variance_names_asset(self):
        cov = SymmetricMatrix(np.diag([1.0, 0.0]), role="covariance", labels=("AAA", "BBB"))
        with pytest.raises(DegenerateAssetError, match="BBB"):
            to_correlation(cov)

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            r = rng.standard_normal((5, 50))
            cov = sample_covariance_array(r)
            scales = rng.uniform(0.5, 20.0, 5)
            scaled = cov * np.outer(scales, scales)
            a = correlation_array(cov)
            b = correlation_array(scaled)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_to_covariance_identity_variances(self):
        out = to_covariance(SymmetricMatrix(np.eye(2), role="correlation"), (4.0, 9.0))
        assert np.array_equal(out.values, np.diag([4.0, 9.0]))
        assert out.role == "covariance"

    def test_to_covariance_offdiagonal(self):
        corr = SymmetricMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]), role="correlation")
        out = to_covariance(corr, (4.0, 9.0))
        assert abs(out.values[0, 1] - 3.0) < 1e-15

    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            r = rng.standard_normal((6, 60))
            cov = sample_covariance(r)
            back = to_covariance(to_correlation(cov), np.diag(cov.values))
            assert np.max(np.abs(back.values - cov.values)) < 1e-12

    def test_nonpositive_variance_rejected(self):
        corr = SymmetricMatrix(np.eye(2), role="correlation")
        with pytest.raises(DegenerateAssetError):
            to_covariance(corr, (1.0, 0.0))


class TestEigendecompose:
    def test_identity(self):
        es = eigendecompose(np.eye(3))
        assert np.array_equal(es.eigenvalues, np.ones(3))

    def test_two_by_two_closed_form(self):
        for rho in (0.8, -0.3, 0.0):
            es = eigendecompose(np.array([[1.0, rho], [rho, 1.0]]))
            assert es.eigenvalues[0] == pytest.approx(1.0 + abs(rho), abs=1e-12)
            assert es.eigenvalues[1] == pytest.approx(1.0 - abs(rho), abs=1e-12)

    def test_rank_one(self):
        v = np.array([3.0, 0.0, 4.0])
        es = eigendecompose(np.outer(v, v))
        assert es.eigenvalues[0] == pytest.approx(25.0, abs=1e-10)
        assert np.max(np.abs(es.eigenvalues[1:])) < 1e-10

    def test_descending_orthonormal_reconstruction(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            a = rng.standard_normal((7, 7))
            m = a + a.T
            es = eigendecompose(m)
            assert (np.diff(es.eigenvalues) <= 1e-12).all()
            gram = es.eigenvectors.T @ es.eigenvectors
            assert np.max(np.abs(gram - np.eye(7))) < 1e-10
            recon = (es.eigenvectors * es.eigenvalues) @ es.eigenvectors.T
            assert np.max(np.abs(recon - m)) < 1e-9

    def test_nonfinite_rejected(self):
        m = np.eye(2)
        m[0, 1] = m[1, 0] = np.nan
        with pytest.raises(ValueError):
            eigendecompose(m)


class TestEigenvalueClipping:
    def test_psd_input_unchanged(self):
        m = SymmetricMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]), role="covariance")
        out = clip_negative_eigenvalues(m)
        assert np.array_equal(out.values, m.values)

    def test_array_level_flag(self):
        _, clipped = clip_negative_eigenvalues_array(np.eye(2))
        assert not clipped
        _, clipped = clip_negative_eigenvalues_array(np.diag([1.0, -0.5]))
        assert clipped

    def test_diagonal_example(self):
        m = SymmetricMatrix(np.diag([1.0, -0.5]), role="generic")
        out = clip_negative_eigenvalues(m)
        assert np.max(np.abs(out.values - np.diag([1.0, 0.0]))) < 1e-12

    def test_saturated_correlation_example(self):
        m = SymmetricMatrix(np.array([[1.0, 1.2], [1.2, 1.0]]), role="generic")
        out = clip_negative_eigenvalues(m)
        assert np.max(np.abs(out.values - np.full((2, 2), 1.1))) < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            a = rng.standard_normal((6, 6))
            m = SymmetricMatrix(a + a.T, role="generic")
            once = clip_negative_eigenvalues(m)
            twice = clip_negative_eigenvalues(once)
            assert np.max(np.abs(twice.values - once.values)) < 1e-10
            vals = np.linalg.eigvalsh(once.values)
            assert vals[0] > -1e-10


class TestMatrixCsv:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(31)
        r = rng.standard_normal((4, 25))
        m = sample_covariance(r, labels=("w", "x", "y", "z"))
        path = tmp_path / "cov.csv"
        save_matrix_csv(m, path)
        back = load_matrix_csv(path, role="covariance")
        assert np.array_equal(back.values, m.values)
        assert back.labels == m.labels

    def test_rejects_asymmetric_file(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(",a,b\na,1.0,0.5\nb,0.4,1.0\n", encoding="utf-8")
        with pytest.raises(Exception):
            load_matrix_csv(path, role="correlation")

    def test_correlation_role_requires_unit_diagonal(self):
        with pytest.raises(ValueError):
            SymmetricMatrix(np.array([[1.0, 0.2], [0.2, 0.9]]), role="correlation")

    def test_covariance_role_rejects_negative_diagonal(self):
        with pytest.raises(ValueError):
            SymmetricMatrix(np.diag([1.0, -2.0]), role="covariance")
