"""Synthetic correlation truths and Gaussian return panels for testing.

Two generators: a block-nested constant-correlation truth, which the
average-linkage filter reproduces exactly (useful as a fixed-point
oracle), and a layered-loadings truth whose sector blocks are cross-cut by
interleaved style groups. The second one is deliberately not hierarchical:
recovering the style layer is what deeper recursion orders are for.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import NumericError
from .linalg import SymmetricMatrix
from .panel import ReturnPanel

__all__ = [
    "FactorModelSpec",
    "hierarchical_truth",
    "overlapping_truth",
    "uniform_vols",
    "sample_returns",
    "weekday_dates",
    "as_panel",
]


@dataclass(frozen=True)
class FactorModelSpec:
    """Two-level constant-correlation structure: rho_global across blocks,
    rho_within[b] inside block b, unit diagonal. Idiosyncratic variance is
    whatever the factor part leaves of the diagonal."""

    block_sizes: tuple[int, ...]
    rho_within: tuple[float, ...]
    rho_global: float = 0.0

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        if not sizes or any(b < 1 for b in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        within = self.rho_within
        if np.isscalar(within):
            within = (float(within),) * len(sizes)
        within = tuple(float(r) for r in within)
        if len(within) != len(sizes):
            raise ValueError(
                f"{len(sizes)} blocks need {len(sizes)} within-correlations, got {len(within)}"
            )
        if any(not 0.0 <= r < 1.0 for r in within):
            raise ValueError(f"within-block correlations must lie in [0, 1), got {within}")
        if not 0.0 <= self.rho_global <= min(within):
            raise ValueError(
                "global correlation must lie in [0, min(rho_within)] "
                f"for a nested structure, got {self.rho_global}"
            )
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "rho_within", within)
        object.__setattr__(self, "rho_global", float(self.rho_global))

    @property
    def n(self) -> int:
        return sum(self.block_sizes)


def _check_truth(c: np.ndarray, what: str) -> SymmetricMatrix:
    vals = np.linalg.eigvalsh(c)
    if vals[0] <= 1e-12 * max(vals[-1], 1.0):
        raise NumericError(f"{what} is not positive definite (min eigenvalue {vals[0]:.3e})")
    return SymmetricMatrix(c, role="correlation")


def hierarchical_truth(spec: FactorModelSpec) -> SymmetricMatrix:
    """Build the block-nested correlation matrix. The average-linkage
    filter maps it to itself: every merge inside a block averages the
    constant rho_within, every later merge averages rho_global."""
    n = spec.n
    c = np.full((n, n), spec.rho_global)
    start = 0
    for size, rho in zip(spec.block_sizes, spec.rho_within):
        c[start : start + size, start : start + size] = rho
        start += size
    np.fill_diagonal(c, 1.0)
    return _check_truth(c, "hierarchical truth")


def overlapping_truth(
    block_sizes=(10,) * 10,
    n_styles: int = 10,
    global_range=(0.30, 0.45),
    block_range=(0.45, 0.60),
    style_range=(0.40, 0.55),
    seed: int = 11,
) -> SymmetricMatrix:
    """Rank-one global mode plus per-sector-block loadings plus loadings on
    interleaved style groups (asset i belongs to style i mod n_styles).

    The styles cut across the blocks, so no single dendrogram carries the
    whole structure. With the default geometry (blocks of 10, 10 styles) no
    pair of assets shares both a block and a style, which keeps every
    off-diagonal entry well away from 1; loading ranges are sized so the
    matrix stays positive definite.
    """
    sizes = tuple(int(b) for b in block_sizes)
    n = sum(sizes)
    if n < 2 or any(b < 1 for b in sizes):
        raise ValueError(f"bad block sizes {sizes}")
    if not 1 <= n_styles <= n:
        raise ValueError(f"n_styles must lie in [1, {n}], got {n_styles}")
    rng = np.random.default_rng(seed)
    g = rng.uniform(*global_range, n)
    beta = rng.uniform(*block_range, n)
    c = np.outer(g, g)
    start = 0
    for size in sizes:
        sl = slice(start, start + size)
        c[sl, sl] += np.outer(beta[sl], beta[sl])
        start += size
    gamma = rng.uniform(*style_range, n)
    styles = np.arange(n) % n_styles
    for s in range(n_styles):
        idx = np.nonzero(styles == s)[0]
        c[np.ix_(idx, idx)] += np.outer(gamma[idx], gamma[idx])
    np.fill_diagonal(c, 1.0)
    if np.abs(c).max() > 1.0:
        raise ValueError("loading ranges produce correlations outside [-1, 1]")
    return _check_truth(c, "overlapping truth")


def uniform_vols(n: int, lo: float = 0.008, hi: float = 0.02, seed: int = 0) -> np.ndarray:
    """Per-asset daily volatilities drawn uniformly from [lo, hi]."""
    if not 0.0 < lo <= hi:
        raise ValueError(f"need 0 < lo <= hi, got ({lo}, {hi})")
    return np.random.default_rng(seed).uniform(lo, hi, n)


def sample_returns(truth: SymmetricMatrix, t: int, vols=None, seed: int = 0) -> np.ndarray:
    """Draw an n x t panel of i.i.d. Gaussian returns with correlation
    ``truth`` and the given per-asset volatilities (default 1)."""
    c = truth.values if isinstance(truth, SymmetricMatrix) else np.asarray(truth, dtype=np.float64)
    n = c.shape[0]
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if vols is None:
        v = np.ones(n)
    else:
        v = np.broadcast_to(np.asarray(vols, dtype=np.float64), (n,)).copy()
        if (v <= 0).any() or not np.isfinite(v).all():
            raise ValueError("volatilities must be positive and finite")
    sigma = c * np.outer(v, v)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NumericError("truth covariance is not positive definite") from None
    z = np.random.default_rng(seed).standard_normal((n, t))
    return chol @ z


def weekday_dates(count: int, start: str = "2010-01-04") -> tuple[str, ...]:
    """The first ``count`` weekdays from ``start`` as ISO strings."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    d = date.fromisoformat(start)
    out = []
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d.isoformat())
        d += timedelta(days=1)
    return tuple(out)


def as_panel(returns: np.ndarray, start: str = "2010-01-04", prefix: str = "A") -> ReturnPanel:
    """Wrap a dense n x t return matrix as a fully-available ReturnPanel
    with generated weekday dates and zero-padded asset ids."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError(f"expected an (n, t) matrix, got shape {r.shape}")
    n, t = r.shape
    width = max(3, len(str(n - 1)))
    assets = tuple(f"{prefix}{i:0{width}d}" for i in range(n))
    return ReturnPanel(weekday_dates(t, start), assets, r, np.ones_like(r, dtype=bool))
