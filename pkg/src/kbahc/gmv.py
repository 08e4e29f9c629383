"""Global minimum variance portfolios.

Long-short weights solve Sigma x = 1 through a Cholesky factorization
(never an explicit inverse) and normalize to sum one. The long-only
variant runs an active-set loop: solve on the free assets, clamp negative
weights to exact zero, and re-admit a clamped asset whenever its KKT
multiplier turns negative. KKT checks use a relative tolerance of 1e-8 so
the solution is invariant under rescaling of Sigma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ConvergenceError, SingularCovarianceError
from .linalg import SymmetricMatrix

__all__ = ["Weights", "gmv_long_short", "gmv_long_only"]

_KKT_TOL = 1e-8
# relative eigenvalue floor below which the covariance counts as singular
_PD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Weights:
    """Portfolio weight vector summing to one."""

    values: np.ndarray
    assets: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if not np.isfinite(v).all():
            raise ValueError("weights must be finite")
        if abs(v.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {v.sum()!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.assets is not None:
            assets = tuple(str(a) for a in self.assets)
            if len(assets) != v.size:
                raise ValueError("asset id count does not match weight count")
            object.__setattr__(self, "assets", assets)


def _cov_array(cov) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if isinstance(cov, SymmetricMatrix):
        return cov.values, cov.labels
    a = np.asarray(cov, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square covariance, got shape {a.shape}")
    return 0.5 * (a + a.T), None


def _require_pd(sigma: np.ndarray) -> None:
    evals = np.linalg.eigvalsh(sigma)
    if evals[0] <= _PD_FLOOR * max(evals[-1], 0.0):
        raise SingularCovarianceError(
            f"covariance is not positive definite (min eigenvalue {evals[0]:.3g}, "
            f"max {evals[-1]:.3g}); use a cleaned estimator"
        )


def _solve_ones(sigma: np.ndarray) -> np.ndarray:
    try:
        factor = cho_factor(sigma, lower=True)
    except LinAlgError as exc:
        raise SingularCovarianceError(f"Cholesky factorization failed: {exc}") from None
    return cho_solve(factor, np.ones(sigma.shape[0]))


def gmv_long_short(cov) -> Weights:
    """Unconstrained minimum-variance weights Sigma^-1 1 / (1' Sigma^-1 1)."""
    sigma, labels = _cov_array(cov)
    _require_pd(sigma)
    x = _solve_ones(sigma)
    return Weights(x / x.sum(), assets=labels)


def gmv_long_only(cov, max_iter: int | None = None) -> Weights:
    """Minimum-variance weights under w >= 0, active-set method.

    Clamped assets hold weight exactly 0.0. Iteration cap defaults to n^2;
    exceeding it signals numerical pathology rather than a hard problem,
    and raises.
    """
    sigma, labels = _cov_array(cov)
    n = sigma.shape[0]
    if max_iter is None:
        max_iter = max(n * n, 16)
    free = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(free)[0]
        if idx.size == 0:
            raise ConvergenceError("active-set emptied the free set")
        sub = sigma[np.ix_(idx, idx)]
        _require_pd(sub)
        x = _solve_ones(sub)
        w_free = x / x.sum()
        if (w_free < 0).any():
            free[idx[w_free < 0]] = False
            continue
        w = np.zeros(n)
        w[idx] = w_free
        grad = 2.0 * (sigma @ w)
        mu = float(w @ grad)  # equals the free-asset gradient at optimum
        scale = max(abs(mu), np.abs(grad).max(), 1e-300)
        eta = grad - mu
        clamped = ~free
        if clamped.any():
            worst = np.nonzero(clamped)[0][np.argmin(eta[clamped])]
            if eta[worst] < -_KKT_TOL * scale:
                free[worst] = True
                continue
        return Weights(w, assets=labels)
    raise ConvergenceError(
        f"long-only active set did not converge within {max_iter} iterations"
    )
