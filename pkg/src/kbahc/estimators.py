"""Covariance estimator specs and the baseline estimators.

The bootstrap-filtered estimator lives in :mod:`kbahc.bahc`; this module
adds the plain sample estimator, the cross-validated eigenvalue shrinkage
baseline, and the tagged specs the backtest and CLI pass around. The
equally-weighted benchmark is a spec too, but has no covariance: it is
resolved at the portfolio stage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bahc import BootstrapPlan, kbahc_covariance_profile
from .errors import ConfigError, NumericError
from .linalg import SymmetricMatrix, sample_covariance, sample_covariance_array

__all__ = [
    "EqualWeightSpec",
    "SampleSpec",
    "CVSpec",
    "KBahcSpec",
    "EstimatorSpec",
    "cv_eigenvalue_shrinkage",
    "estimate_covariance",
    "parse_estimators",
]


@dataclass(frozen=True)
class EqualWeightSpec:
    """Equally-weighted benchmark portfolio; carries no covariance model."""

    label: str = "EQ"


@dataclass(frozen=True)
class SampleSpec:
    """Raw sample covariance, divisor 1/t."""

    label: str = "Sample"


@dataclass(frozen=True)
class CVSpec:
    """Cross-validated eigenvalue shrinkage with K contiguous folds."""

    folds: int = 10
    label: str = "CV"

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"cross-validation needs at least 2 folds, got {self.folds}")


@dataclass(frozen=True)
class KBahcSpec:
    """Bootstrap-averaged dendrogram filter of order ``k`` with ``m`` replicas."""

    k: int
    m: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"filter order must be >= 1, got {self.k}")
        if self.m < 1:
            raise ConfigError(f"replica count must be >= 1, got {self.m}")

    @property
    def label(self) -> str:
        return f"{self.k}-BAHC"

    @property
    def plan(self) -> BootstrapPlan:
        return BootstrapPlan(m=self.m, base_seed=self.base_seed)


EstimatorSpec = EqualWeightSpec | SampleSpec | CVSpec | KBahcSpec


def _descending_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(m)
    return vals[::-1], vecs[:, ::-1]


def cv_eigenvalue_shrinkage(returns: np.ndarray, folds: int = 10,
                            labels=None) -> SymmetricMatrix:
    """Eigenvalue shrinkage via contiguous-fold cross validation.

    For each fold, the complement's sample eigenvectors are scored on the
    held-out fold's sample covariance; the quadratic forms are averaged
    across folds by eigenvalue rank, floored at 1e-12 of their maximum,
    attached to the full-sample eigenvectors, and the result is rescaled
    to match the full-sample trace.

    Raises
    ------
    NumericError
        If the window is shorter than 2 observations per fold.
    """
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError(f"expected an (n_assets, t) array, got shape {r.shape}")
    n, t = r.shape
    if folds < 2:
        raise ConfigError(f"cross-validation needs at least 2 folds, got {folds}")
    if t < 2 * folds:
        raise NumericError(
            f"cross-validated shrinkage needs t >= {2 * folds} observations "
            f"for {folds} folds, got {t}"
        )
    fold_indices = np.array_split(np.arange(t), folds)
    lam = np.zeros(n)
    mask = np.ones(t, dtype=bool)
    for idx in fold_indices:
        mask[:] = True
        mask[idx] = False
        _, vecs = _descending_eigh(sample_covariance_array(r[:, mask]))
        fold_cov = sample_covariance_array(r[:, idx])
        lam += np.einsum("ji,jk,ki->i", vecs, fold_cov, vecs)
    lam /= folds
    lam = np.maximum(lam, 1e-12 * lam.max())
    full = sample_covariance_array(r)
    _, vecs = _descending_eigh(full)
    out = (vecs * lam) @ vecs.T
    out *= np.trace(full) / lam.sum()
    return SymmetricMatrix(out, role="covariance", labels=labels)


def estimate_covariance(spec: EstimatorSpec, returns: np.ndarray,
                        labels=None) -> SymmetricMatrix:
    """Covariance estimate of an (n, t) window under the given spec."""
    if isinstance(spec, SampleSpec):
        return sample_covariance(returns, labels=labels)
    if isinstance(spec, CVSpec):
        return cv_eigenvalue_shrinkage(returns, folds=spec.folds, labels=labels)
    if isinstance(spec, KBahcSpec):
        return kbahc_covariance_profile(returns, [spec.k], spec.plan, labels=labels)[spec.k]
    if isinstance(spec, EqualWeightSpec):
        raise ConfigError("the equally-weighted benchmark has no covariance estimate")
    raise ConfigError(f"unknown estimator spec {spec!r}")


def parse_estimators(names, ks=(1, 2, 3, 4, 7, 11, 18, 30), m: int = 100,
                     base_seed: int = 0, cv_folds: int = 10) -> tuple[EstimatorSpec, ...]:
    """Resolve estimator names into specs.

    ``kbahc`` expands into one spec per requested filter order. Order is
    preserved, duplicates are rejected.
    """
    specs: list[EstimatorSpec] = []
    for raw in names:
        name = raw.strip().lower()
        if name == "eq":
            specs.append(EqualWeightSpec())
        elif name == "sample":
            specs.append(SampleSpec())
        elif name == "cv":
            specs.append(CVSpec(folds=cv_folds))
        elif name == "kbahc":
            for k in ks:
                specs.append(KBahcSpec(k=int(k), m=m, base_seed=base_seed))
        else:
            raise ConfigError(
                f"unknown estimator {raw!r}; expected eq, sample, cv or kbahc"
            )
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate estimators in {list(names)!r}")
    return tuple(specs)
