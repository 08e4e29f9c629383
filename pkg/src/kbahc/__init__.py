"""Covariance cleaning by recursive hierarchical filtering of bootstrapped
correlation matrices, with minimum-variance backtests against baseline
estimators."""
import os as _os

# Pin BLAS pools before numpy loads: threaded reductions are not
# bit-reproducible, and reports promise byte-identical reruns.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")
del _os, _var

from .bahc import (
    BootstrapPlan,
    bootstrap_columns,
    kbahc_correlation,
    kbahc_correlation_profile,
    kbahc_covariance,
    kbahc_covariance_profile,
    resample_columns,
)
from .backtest import (
    BacktestConfig,
    BacktestReport,
    ExperimentConfig,
    ExperimentResult,
    SpectraResult,
    apply_costs,
    drift_weights,
    random_experiment,
    run_backtest,
    spectra_experiment,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateAssetError,
    EmptyUniverseError,
    KbahcError,
    MissingDataError,
    NumericError,
    ParseError,
    SingularCovarianceError,
)
from .estimators import (
    CVSpec,
    EqualWeightSpec,
    KBahcSpec,
    SampleSpec,
    cv_eigenvalue_shrinkage,
    estimate_covariance,
    parse_estimators,
)
from .gmv import Weights, gmv_long_only, gmv_long_short
from .hclust import (
    Dendrogram,
    FilteredCorrelation,
    Merge,
    average_linkage,
    hcal,
    k_hcal,
    k_hcal_profile,
)
from .linalg import (
    EigenSystem,
    SymmetricMatrix,
    clip_negative_eigenvalues,
    eigendecompose,
    load_matrix_csv,
    sample_covariance,
    save_matrix_csv,
    to_correlation,
    to_covariance,
)
from .metrics import (
    MetricRow,
    concentration,
    gross_leverage,
    ipr,
    realized_volatility,
    sharpe_ratio,
    shuffled_null_panel,
    turnover_gamma,
    yearly_dense_rank,
)
from .panel import (
    ReturnPanel,
    WindowSpec,
    load_panel,
    save_panel,
    slice_window,
    universe_at,
)
from .synth import (
    FactorModelSpec,
    as_panel,
    hierarchical_truth,
    overlapping_truth,
    sample_returns,
    uniform_vols,
    weekday_dates,
)

__version__ = "0.1.0"
