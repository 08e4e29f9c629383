from datetime import date

import numpy as np
import pytest

from kbahc.hclust import hcal
from kbahc.linalg import SymmetricMatrix, sample_covariance_array
from kbahc.synth import (
    FactorModelSpec,
    as_panel,
    hierarchical_truth,
    overlapping_truth,
    sample_returns,
    uniform_vols,
    weekday_dates,
)


class TestHierarchicalTruth:
    def test_two_block_values(self):
        spec = FactorModelSpec(block_sizes=(3, 3), rho_within=(0.6, 0.6), rho_global=0.2)
        c = hierarchical_truth(spec).values
        assert c.shape == (6, 6)
        assert np.all(np.diag(c) == 1.0)
        assert c[0, 1] == 0.6
        assert c[4, 5] == 0.6
        assert c[0, 4] == 0.2

    def test_filter_fixed_point(self):
        spec = FactorModelSpec(block_sizes=(3, 3), rho_within=(0.6, 0.6), rho_global=0.2)
        truth = hierarchical_truth(spec)
        filtered = hcal(truth)
        assert np.max(np.abs(filtered.values - truth.values)) < 1e-12

    def test_distinct_block_levels_fixed_point(self):
        spec = FactorModelSpec(block_sizes=(4, 3, 5), rho_within=(0.7, 0.5, 0.3), rho_global=0.1)
        truth = hierarchical_truth(spec)
        filtered = hcal(truth)
        assert np.max(np.abs(filtered.values - truth.values)) < 1e-12

    def test_scalar_within_broadcast(self):
        spec = FactorModelSpec(block_sizes=(2, 2), rho_within=0.5, rho_global=0.0)
        assert spec.rho_within == (0.5, 0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            FactorModelSpec(block_sizes=(), rho_within=())
        with pytest.raises(ValueError):
            FactorModelSpec(block_sizes=(2, 2), rho_within=(0.5,))
        with pytest.raises(ValueError):
            FactorModelSpec(block_sizes=(2, 2), rho_within=(0.5, 1.0))
        with pytest.raises(ValueError):
            # global above a within level breaks the nesting
            FactorModelSpec(block_sizes=(2, 2), rho_within=(0.3, 0.6), rho_global=0.4)


class TestOverlappingTruth:
    def test_default_geometry(self):
        truth = overlapping_truth()
        c = truth.values
        assert c.shape == (100, 100)
        assert np.all(np.diag(c) == 1.0)
        assert np.abs(c[np.triu_indices(100, 1)]).max() < 1.0
        assert np.linalg.eigvalsh(c)[0] > 0

    def test_no_double_membership_under_defaults(self):
        # asset i sits in block i // 10 and style i % 10; the two layers
        # only ever overlap on the asset itself
        blocks = np.arange(100) // 10
        styles = np.arange(100) % 10
        for i in range(100):
            same_both = (blocks == blocks[i]) & (styles == styles[i])
            assert same_both.sum() == 1

    def test_style_layer_present(self):
        c = overlapping_truth().values
        blocks = np.arange(100) // 10
        styles = np.arange(100) % 10
        iu = np.triu_indices(100, 1)
        same_block = blocks[iu[0]] == blocks[iu[1]]
        same_style = styles[iu[0]] == styles[iu[1]]
        neither = ~same_block & ~same_style
        # style-mates correlate above the purely global pairs
        assert c[iu][same_style & ~same_block].mean() > c[iu][neither].mean() + 0.1

    def test_seed_determinism(self):
        a = overlapping_truth(seed=11).values
        b = overlapping_truth(seed=11).values
        assert np.array_equal(a, b)
        assert not np.array_equal(a, overlapping_truth(seed=12).values)

    def test_validation(self):
        with pytest.raises(ValueError):
            overlapping_truth(block_sizes=(0, 5))
        with pytest.raises(ValueError):
            overlapping_truth(n_styles=0)
        with pytest.raises(ValueError):
            # loadings this large push pair correlations past 1
            overlapping_truth(
                block_sizes=(5, 5), n_styles=1,
                global_range=(0.7, 0.7), block_range=(0.7, 0.7), style_range=(0.7, 0.7),
            )


class TestSampleReturns:
    def test_shape_and_determinism(self):
        truth = SymmetricMatrix(np.eye(4), role="correlation")
        r1 = sample_returns(truth, 50, seed=3)
        r2 = sample_returns(truth, 50, seed=3)
        assert r1.shape == (4, 50)
        assert np.array_equal(r1, r2)
        assert not np.array_equal(r1, sample_returns(truth, 50, seed=4))

    def test_identity_truth_long_sample(self):
        truth = SymmetricMatrix(np.eye(5), role="correlation")
        r = sample_returns(truth, 100_000, seed=0)
        cov = sample_covariance_array(r)
        d = np.sqrt(np.diag(cov))
        corr = cov / np.outer(d, d)
        off = corr[np.triu_indices(5, 1)]
        assert np.abs(off).max() < 0.02

    def test_volatility_scaling(self):
        truth = SymmetricMatrix(np.eye(1), role="correlation")
        r = sample_returns(truth, 10_000, vols=0.015, seed=0)
        assert float(r.std()) == pytest.approx(0.015, rel=0.05)

    def test_correlated_truth_recovered(self):
        spec = FactorModelSpec(block_sizes=(2, 2), rho_within=(0.7, 0.7), rho_global=0.0)
        truth = hierarchical_truth(spec)
        r = sample_returns(truth, 200_000, seed=1)
        cov = sample_covariance_array(r)
        d = np.sqrt(np.diag(cov))
        corr = cov / np.outer(d, d)
        assert corr[0, 1] == pytest.approx(0.7, abs=0.02)
        assert corr[0, 2] == pytest.approx(0.0, abs=0.02)

    def test_validation(self):
        truth = SymmetricMatrix(np.eye(2), role="correlation")
        with pytest.raises(ValueError):
            sample_returns(truth, 0)
        with pytest.raises(ValueError):
            sample_returns(truth, 10, vols=[-0.01, 0.01])


class TestVolsAndDatesAndPanel:
    def test_uniform_vols_range(self):
        v = uniform_vols(500, 0.008, 0.02, seed=0)
        assert v.shape == (500,)
        assert v.min() >= 0.008
        assert v.max() <= 0.02
        assert np.array_equal(v, uniform_vols(500, 0.008, 0.02, seed=0))

    def test_uniform_vols_validation(self):
        with pytest.raises(ValueError):
            uniform_vols(5, 0.0, 0.02)
        with pytest.raises(ValueError):
            uniform_vols(5, 0.03, 0.02)

    def test_weekday_dates_skip_weekends(self):
        dates = weekday_dates(30, start="2010-01-04")
        assert len(dates) == 30
        assert dates[0] == "2010-01-04"
        for d in dates:
            assert date.fromisoformat(d).weekday() < 5
        assert list(dates) == sorted(dates)

    def test_weekday_dates_start_on_weekend(self):
        dates = weekday_dates(2, start="2010-01-02")  # a Saturday
        assert dates == ("2010-01-04", "2010-01-05")

    def test_as_panel(self):
        r = np.arange(6, dtype=np.float64).reshape(2, 3) * 0.01
        panel = as_panel(r, start="2010-01-04")
        assert panel.assets == ("A000", "A001")
        assert panel.dates == weekday_dates(3, "2010-01-04")
        assert np.array_equal(panel.values, r)
        assert panel.available.all()

    def test_as_panel_rejects_non_matrix(self):
        with pytest.raises(ValueError):
            as_panel(np.zeros(5))
