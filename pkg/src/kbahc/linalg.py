"""Symmetric matrix container and the covariance/correlation primitives.

Conventions used throughout the package:

* return panels are arrays of shape (n_assets, n_obs), one row per asset;
* sample covariance uses the 1/t divisor, not 1/(t-1);
* eigenvalues are reported in descending order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateAssetError, ParseError

__all__ = [
    "SymmetricMatrix",
    "EigenSystem",
    "sample_covariance",
    "to_correlation",
    "to_covariance",
    "eigendecompose",
    "clip_negative_eigenvalues",
    "save_matrix_csv",
    "load_matrix_csv",
]

ROLES = ("generic", "covariance", "correlation")


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Square symmetric float matrix with an optional semantic role.

    Storage enforces exact symmetry: the input is averaged with its
    transpose, which is a no-op for already symmetric input. The array is
    made read-only.

    Parameters
    ----------
    values : ndarray (n, n)
        Matrix entries, finite.
    role : str
        "covariance" (diagonal >= 0), "correlation" (unit diagonal,
        entries within [-1, 1] up to 1e-12) or "generic".
    labels : tuple of str, optional
        Asset identifiers, one per row.
    """

    values: np.ndarray
    role: str = "generic"
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("matrix entries must be finite")
        v = 0.5 * (v + v.T)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.role not in ROLES:
            raise ValueError(f"unknown matrix role {self.role!r}")
        if self.labels is not None:
            labels = tuple(str(a) for a in self.labels)
            if len(labels) != v.shape[0]:
                raise ValueError("label count does not match matrix dimension")
            object.__setattr__(self, "labels", labels)
        d = np.diag(v)
        if self.role == "covariance":
            # exact zeros are legal (degenerate asset), genuine negatives are not
            if (d < -1e-12 * max(1.0, float(np.abs(d).max(initial=0.0)))).any():
                raise ValueError("covariance diagonal must be nonnegative")
        elif self.role == "correlation":
            if np.abs(d - 1.0).max(initial=0.0) > 1e-9:
                raise ValueError("correlation diagonal must be 1")
            if np.abs(v).max(initial=0.0) > 1.0 + 1e-12:
                raise ValueError("correlation entries must lie in [-1, 1]")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=np.float64)
        vecs = np.asarray(self.eigenvectors, dtype=np.float64)
        n = vals.shape[0]
        if vecs.shape != (n, n):
            raise ValueError("eigenvector matrix shape does not match eigenvalue count")
        if (np.diff(vals) > 0).any():
            raise ValueError("eigenvalues must be in descending order")
        gram = vecs.T @ vecs
        if np.abs(gram - np.eye(n)).max() > 1e-10:
            raise ValueError("eigenvectors are not orthonormal")
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)


def _as_array(m) -> np.ndarray:
    if isinstance(m, SymmetricMatrix):
        return m.values
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _labels_of(m) -> tuple[str, ...] | None:
    return m.labels if isinstance(m, SymmetricMatrix) else None


def sample_covariance_array(returns: np.ndarray) -> np.ndarray:
    """Sample covariance of an (n, t) panel with the 1/t divisor."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError(f"expected an (n_assets, t) array, got shape {r.shape}")
    t = r.shape[1]
    if t < 2:
        raise ValueError(f"sample covariance needs at least 2 observations, got {t}")
    centered = r - r.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / t
    return 0.5 * (cov + cov.T)


def sample_covariance(returns: np.ndarray, labels: tuple[str, ...] | None = None) -> SymmetricMatrix:
    """Per-row demeaned covariance of an (n, t) return panel, divisor 1/t."""
    return SymmetricMatrix(sample_covariance_array(returns), role="covariance", labels=labels)


def correlation_array(cov: np.ndarray, labels=None) -> np.ndarray:
    """Correlation entries of a covariance array; unit diagonal set exactly."""
    cov = _as_array(cov)
    d = np.diag(cov)
    bad = np.nonzero(d <= 0)[0]
    if bad.size:
        i = int(bad[0])
        name = labels[i] if labels is not None else f"index {i}"
        raise DegenerateAssetError(
            f"asset {name} has non-positive variance {d[i]:.3g}; correlation undefined"
        )
    s = np.sqrt(d)
    corr = cov / np.outer(s, s)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    np.clip(corr, -1.0, 1.0, out=corr)
    return corr


def to_correlation(cov: SymmetricMatrix | np.ndarray) -> SymmetricMatrix:
    """Rescale a covariance to correlation.

    Raises
    ------
    DegenerateAssetError
        If any variance is zero or negative, naming the offending asset.
    """
    labels = _labels_of(cov)
    corr = correlation_array(_as_array(cov), labels)
    return SymmetricMatrix(corr, role="correlation", labels=labels)


def to_covariance(corr: SymmetricMatrix | np.ndarray, variances: np.ndarray) -> SymmetricMatrix:
    """Reconstruct a covariance from correlation entries and target variances.

    Off-diagonal entries are c_ij * sqrt(var_i * var_j); the diagonal is set
    to ``variances`` exactly. Filtered correlation input may carry a small
    clip-induced diagonal deviation from 1, which is tolerated: only the
    off-diagonal entries of ``corr`` are used.
    """
    c = _as_array(corr)
    var = np.asarray(variances, dtype=np.float64)
    if var.shape != (c.shape[0],):
        raise ValueError("variance vector length does not match matrix dimension")
    bad = np.nonzero(var <= 0)[0]
    if bad.size:
        i = int(bad[0])
        labels = _labels_of(corr)
        name = labels[i] if labels is not None else f"index {i}"
        raise DegenerateAssetError(f"asset {name} has non-positive variance {var[i]:.3g}")
    dev = np.abs(np.diag(c) - 1.0).max(initial=0.0)
    if dev > 0.5:
        raise ValueError(
            f"input does not look like a correlation matrix (max diagonal deviation {dev:.3g})"
        )
    s = np.sqrt(var)
    cov = c * np.outer(s, s)
    np.fill_diagonal(cov, var)
    return SymmetricMatrix(cov, role="covariance", labels=_labels_of(corr))


def eigendecompose(m: SymmetricMatrix | np.ndarray) -> EigenSystem:
    """Full eigendecomposition, eigenvalues descending, ties kept stable."""
    a = _as_array(m)
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(-vals, kind="stable")
    return EigenSystem(vals[order], vecs[:, order])


def clip_negative_eigenvalues_array(m: np.ndarray) -> tuple[np.ndarray, bool]:
    """Zero out negative eigenvalues; returns (matrix, whether anything was clipped).

    The input comes back unchanged when it is already PSD. No diagonal
    renormalization is applied after reconstruction; any diagonal drift is
    the caller's to inspect.
    """
    vals, vecs = np.linalg.eigh(m)
    if vals[0] >= 0.0:
        return m, False
    out = (vecs * np.maximum(vals, 0.0)) @ vecs.T
    out = 0.5 * (out + out.T)
    return out, True


def clip_negative_eigenvalues(m: SymmetricMatrix | np.ndarray) -> SymmetricMatrix:
    """PSD projection by zeroing negative eigenvalues.

    The role tag is preserved for covariance input (the diagonal stays
    nonnegative). Correlation input whose diagonal drifts away from 1 in
    the reconstruction is returned with role "generic".
    """
    a = _as_array(m)
    out, changed = clip_negative_eigenvalues_array(a)
    labels = _labels_of(m)
    role = m.role if isinstance(m, SymmetricMatrix) else "generic"
    if not changed:
        if isinstance(m, SymmetricMatrix):
            return m
        return SymmetricMatrix(out, role=role, labels=labels)
    if role == "correlation" and np.abs(np.diag(out) - 1.0).max() > 1e-9:
        role = "generic"
    return SymmetricMatrix(out, role=role, labels=labels)


def save_matrix_csv(m: SymmetricMatrix, path) -> None:
    """Write a labeled matrix as CSV: header of asset ids, one row per asset."""
    labels = m.labels or tuple(f"a{i}" for i in range(m.dim))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(labels)
        for row in m.values:
            writer.writerow([repr(float(x)) for x in row])


def load_matrix_csv(path, role: str = "generic", tol: float = 1e-9) -> SymmetricMatrix:
    """Load a matrix CSV written by :func:`save_matrix_csv`.

    Checks squareness and symmetry within ``tol`` before the (exact)
    symmetrization done by the container.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            labels = tuple(next(reader))
        except StopIteration:
            raise ParseError("empty matrix file", row=1) from None
        rows = []
        for irow, row in enumerate(reader, start=2):
            if len(row) != len(labels):
                raise ParseError(
                    f"expected {len(labels)} columns, got {len(row)}", row=irow
                )
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise ParseError(f"non-numeric cell: {exc}", row=irow) from None
    n = len(labels)
    if len(rows) != n:
        raise DataError(f"matrix file is not square: {n} columns, {len(rows)} rows")
    a = np.asarray(rows, dtype=np.float64)
    if np.abs(a - a.T).max(initial=0.0) > tol:
        raise DataError(f"matrix is not symmetric within {tol:g}")
    return SymmetricMatrix(a, role=role, labels=labels)
