"""Portfolio and spectrum diagnostics.

All annualization uses sqrt(252) on daily observations. The Sharpe ratio
here is the plain moment estimator (mean over standard deviation); output
tables label it "SR (moment)" to keep it distinguishable from robust
variants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gmv import Weights
from .linalg import EigenSystem

__all__ = [
    "TRADING_DAYS_PER_YEAR",
    "MetricRow",
    "ipr",
    "shuffled_null_panel",
    "realized_volatility",
    "sharpe_ratio",
    "concentration",
    "gross_leverage",
    "turnover_gamma",
    "yearly_dense_rank",
]

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class MetricRow:
    """One line of the summary table: estimator performance at one window length."""

    dt_in: int
    estimator: str
    realized_vol: float
    sharpe: float
    n_eff: float
    n_90: float
    gross_leverage: float
    gamma: float
    n_windows: int


def ipr(system: EigenSystem) -> np.ndarray:
    """Inverse participation ratio 1 / sum_j v_ij^4 per eigenvector.

    Ranges from 1 (fully localized) to n (uniform). Eigenvectors must be
    unit norm within 1e-6.
    """
    vecs = system.eigenvectors
    norms = np.linalg.norm(vecs, axis=0)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ValueError("eigenvectors must have unit norm for the participation ratio")
    return 1.0 / (vecs**4).sum(axis=0)


def shuffled_null_panel(returns: np.ndarray, seed: int) -> np.ndarray:
    """Destroy cross-asset dependence: permute each row independently."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError(f"expected an (n_assets, t) array, got shape {r.shape}")
    rng = np.random.default_rng(seed)
    return rng.permuted(r, axis=1)


def realized_volatility(returns: np.ndarray) -> float:
    """Annualized population standard deviation of a daily return series."""
    r = np.asarray(returns, dtype=np.float64).ravel()
    if r.size < 2:
        raise ValueError("volatility needs at least 2 observations")
    if r.max() == r.min():
        return 0.0  # exact for constant series; mean subtraction leaves noise
    return float(r.std() * math.sqrt(TRADING_DAYS_PER_YEAR))


def sharpe_ratio(returns: np.ndarray) -> float:
    """Annualized mean-over-sd Sharpe ratio.

    A zero-sd series maps to signed infinity (nan when the mean is zero
    too); table writers render non-finite values as missing.
    """
    r = np.asarray(returns, dtype=np.float64).ravel()
    if r.size < 2:
        raise ValueError("Sharpe ratio needs at least 2 observations")
    sd = 0.0 if r.max() == r.min() else float(r.std())
    mean = r.mean()
    if sd == 0.0:
        if mean == 0.0:
            return math.nan
        return math.inf if mean > 0 else -math.inf
    return float(mean / sd * math.sqrt(TRADING_DAYS_PER_YEAR))


def _weight_values(w) -> np.ndarray:
    if isinstance(w, Weights):
        return w.values
    return np.asarray(w, dtype=np.float64).ravel()


def concentration(w) -> tuple[float, int]:
    """(effective asset count 1 / sum w^2, smallest count holding 90% of
    the absolute weight mass)."""
    v = _weight_values(w)
    n_eff = float(1.0 / (v**2).sum())
    a = np.sort(np.abs(v))[::-1]
    cum = np.cumsum(a)
    n_90 = int(np.searchsorted(cum, 0.9 * cum[-1]) + 1)
    return n_eff, n_90


def gross_leverage(w) -> float:
    """Sum of absolute weights."""
    return float(np.abs(_weight_values(w)).sum())


def _align(prev: Weights, new: Weights) -> tuple[np.ndarray, np.ndarray]:
    if prev.assets is None or new.assets is None:
        if prev.values.size != new.values.size:
            raise ValueError("unlabeled weight snapshots must have equal length")
        return prev.values, new.values
    union = sorted(set(prev.assets) | set(new.assets))
    pa = dict(zip(prev.assets, prev.values))
    na = dict(zip(new.assets, new.values))
    p = np.array([pa.get(a, 0.0) for a in union])
    q = np.array([na.get(a, 0.0) for a in union])
    return p, q


def turnover_gamma(snapshots) -> float:
    """Mean L1 distance between consecutive weight snapshots.

    Snapshots are aligned on the union of their asset ids, absent assets
    counting as weight zero; unlabeled snapshots align positionally.
    """
    snaps = list(snapshots)
    if len(snaps) < 2:
        raise ValueError("turnover needs at least 2 weight snapshots")
    dists = []
    for prev, new in zip(snaps, snaps[1:]):
        p, q = _align(prev, new)
        dists.append(np.abs(q - p).sum())
    return float(np.mean(dists))


def yearly_dense_rank(scores) -> dict:
    """Average dense rank across years of per-year scores.

    ``scores`` maps a label to its score sequence, all sequences aligned on
    the same years. Scores are rounded to 2 decimals before ranking; the
    highest value gets rank 1, equal values share a rank, and the next
    distinct value gets the next integer. Non-finite scores rank strictly
    below every finite one.
    """
    labels = list(scores)
    if not labels:
        return {}
    table = np.array([[float(x) for x in scores[lab]] for lab in labels])
    if table.ndim != 2 or (table.shape[1] == 0):
        raise ValueError("each label needs at least one yearly score")
    n_years = table.shape[1]
    ranks = np.zeros_like(table)
    for y in range(n_years):
        col = np.round(table[:, y], 2)
        finite = np.isfinite(col)
        distinct = sorted(set(col[finite]), reverse=True)
        lookup = {v: i + 1 for i, v in enumerate(distinct)}
        worst = len(distinct) + 1
        for i, v in enumerate(col):
            ranks[i, y] = lookup[v] if np.isfinite(v) else worst
    return {lab: float(ranks[i].mean()) for i, lab in enumerate(labels)}
