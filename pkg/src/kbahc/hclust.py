"""Average-linkage clustering and the recursive dendrogram filter.

The filter replaces every off-diagonal entry c_ij by 1 - rho, where rho is
the height of the unique merge joining i and j in the average-linkage
dendrogram of the distance matrix D = 1 - C. Applied recursively to the
residue C minus the running filtered sum, it yields a sequence of filtered
matrices that converges back to C as the order grows.

The linkage is the naive O(n^3) greedy algorithm, jitted with numba; fine
for n up to roughly 1500. Ties in the merge queue are broken by the
lexicographically smallest (min cluster id, max cluster id) pair, with leaf
clusters numbered 0..n-1 and each merge minting id n, n+1, ... in order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError
from .linalg import SymmetricMatrix
from .linalg import SymmetricMatrix, clip_negative_eigenvalues_array

__all__ = [
    "Merge",
    "Dendrogram",
    "FilteredCorrelation",
    "average_linkage",
    "hcal",
    "k_hcal",
    "k_hcal_profile",
    "save_dendrogram_csv",
]


@njit(cache=True)
def _linkage_kernel(d, src, out, lefts, rights, heights):
    # d: working distance matrix, destroyed. src: matrix being filtered,
    # its values land in out (off-diagonal per merge, diagonal copied).
    n = d.shape[0]
    ids = np.empty(n, np.int64)
    sizes = np.empty(n, np.float64)
    alive = np.ones(n, np.bool_)
    first = np.empty(n, np.int64)
    last = np.empty(n, np.int64)
    nxt = np.full(n, -1, np.int64)
    for i in range(n):
        ids[i] = i
        sizes[i] = 1.0
        first[i] = i
        last[i] = i
    for step in range(n - 1):
        best = np.inf
        bi = -1
        bj = -1
        blo = -1
        bhi = -1
        for i in range(n):
            if not alive[i]:
                continue
            for j in range(i + 1, n):
                if not alive[j]:
                    continue
                v = d[i, j]
                if v < best:
                    best = v
                    bi = i
                    bj = j
                    if ids[i] < ids[j]:
                        blo = ids[i]
                        bhi = ids[j]
                    else:
                        blo = ids[j]
                        bhi = ids[i]
                elif v == best:
                    if ids[i] < ids[j]:
                        lo = ids[i]
                        hi = ids[j]
                    else:
                        lo = ids[j]
                        hi = ids[i]
                    if lo < blo or (lo == blo and hi < bhi):
                        bi = i
                        bj = j
                        blo = lo
                        bhi = hi
        lefts[step] = blo
        rights[step] = bhi
        heights[step] = best
        val = 1.0 - best
        u = first[bi]
        while u != -1:
            w = first[bj]
            while w != -1:
                out[u, w] = val
                out[w, u] = val
                w = nxt[w]
            u = nxt[u]
        na = sizes[bi]
        nb = sizes[bj]
        tot = na + nb
        for r in range(n):
            if alive[r] and r != bi and r != bj:
                nv = (na * d[bi, r] + nb * d[bj, r]) / tot
                d[bi, r] = nv
                d[r, bi] = nv
        alive[bj] = False
        sizes[bi] = tot
        ids[bi] = n + step
        nxt[last[bi]] = first[bj]
        last[bi] = last[bj]
    for i in range(n):
        out[i, i] = src[i, i]


def _run_linkage(dist: np.ndarray, src: np.ndarray):
    n = dist.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    lefts = np.empty(n - 1, dtype=np.int64)
    rights = np.empty(n - 1, dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    _linkage_kernel(dist, src, out, lefts, rights, heights)
    return out, lefts, rights, heights


def hcal_array(m: np.ndarray) -> np.ndarray:
    """Filter a symmetric array through its own average-linkage dendrogram."""
    n = m.shape[0]
    if n == 1:
        return m.copy()
    out, _, _, _ = _run_linkage(1.0 - m, m)
    return out


@dataclass(frozen=True, eq=False)
class Merge:
    """One dendrogram merge: (left, right) cluster ids joined at ``height``."""

    left: int
    right: int
    height: float
    new_id: int
    members: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Full merge history of an agglomerative clustering over n leaves."""

    n_leaves: int
    merges: tuple[Merge, ...]

    def __post_init__(self):
        n = self.n_leaves
        if len(self.merges) != n - 1:
            raise ValueError(f"expected {n - 1} merges for {n} leaves, got {len(self.merges)}")
        heights = np.array([m.height for m in self.merges])
        # 1e-12 slack: Lance-Williams updates can round a hair below the
        # previous merge height even though the exact values cannot
        if heights.size and (np.diff(heights) < -1e-12).any():
            raise ValueError("merge heights must be non-decreasing")
        if self.merges and set(self.merges[-1].members) != set(range(n)):
            raise ValueError("final merge must contain every leaf")

    def members_of(self, cluster_id: int) -> tuple[int, ...]:
        """Leaf members of a cluster id (leaves are their own singleton)."""
        if 0 <= cluster_id < self.n_leaves:
            return (cluster_id,)
        idx = cluster_id - self.n_leaves
        if not 0 <= idx < len(self.merges):
            raise KeyError(f"unknown cluster id {cluster_id}")
        return self.merges[idx].members

    def clusters(self) -> frozenset[frozenset[int]]:
        """The family of internal-node member sets, ignoring merge order."""
        return frozenset(frozenset(m.members) for m in self.merges)


def average_linkage(dist: np.ndarray) -> Dendrogram:
    """Average-linkage dendrogram of a symmetric distance matrix.

    Only off-diagonal entries are read. Cluster distances follow the
    unweighted pair-group average, updated via Lance-Williams weights
    n_p / (n_p + n_q). Exactly tied candidate pairs merge in id-lex order.
    """
    a = dist.values if isinstance(dist, SymmetricMatrix) else np.asarray(dist, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square distance matrix, got shape {a.shape}")
    n = a.shape[0]
    if n < 2:
        raise ValueError("linkage needs at least 2 items")
    if not np.isfinite(a).all():
        raise ValueError("distances must be finite")
    work = 0.5 * (a + a.T)
    _, lefts, rights, heights = _run_linkage(work, np.zeros_like(work))
    members: dict[int, tuple[int, ...]] = {i: (i,) for i in range(n)}
    merges = []
    for step in range(n - 1):
        left = int(lefts[step])
        right = int(rights[step])
        new_id = n + step
        mem = tuple(sorted(members[left] + members[right]))
        members[new_id] = mem
        merges.append(Merge(left, right, float(heights[step]), new_id, mem))
    return Dendrogram(n_leaves=n, merges=tuple(merges))


@dataclass(frozen=True, eq=False)
class FilteredCorrelation:
    """Output of the order-k filter.

    ``clipped`` records whether negative eigenvalues were removed from the
    assembled matrix (possible for order > 1 only). ``diagonal_drift`` is
    the largest absolute diagonal change the clip introduced; the diagonal
    is deliberately not renormalized, so a clipped matrix is tagged
    "generic" once its diagonal leaves 1 by more than 1e-9.
    """

    matrix: SymmetricMatrix
    order: int
    clipped: bool
    diagonal_drift: float


def _check_correlation_input(c) -> np.ndarray:
    if isinstance(c, SymmetricMatrix):
        if c.role != "correlation":
            raise ValueError("filter input must be a correlation matrix")
        return c.values
    a = np.asarray(c, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.abs(np.diag(a) - 1.0).max(initial=0.0) > 1e-9:
        raise ValueError("filter input must have unit diagonal")
    if np.abs(a).max(initial=0.0) > 1.0 + 1e-12:
        raise ValueError("filter input entries must lie in [-1, 1]")
    return 0.5 * (a + a.T)


def k_hcal_profile_arrays(c: np.ndarray, orders) -> dict[int, tuple[np.ndarray, bool, float]]:
    """One recursion pass, capturing the filtered matrix at each requested order.

    Returns ``{k: (matrix, clipped, diagonal_drift)}``. The recursion state
    itself is never clipped; clipping is applied to each emitted order > 1.
    """
    ks = sorted(set(int(k) for k in orders))
    if not ks or ks[0] < 1:
        raise ConfigError(f"filter orders must be >= 1, got {sorted(orders)}")
    kmax = ks[-1]
    want = set(ks)
    acc = np.zeros_like(c)
    out: dict[int, tuple[np.ndarray, bool, float]] = {}
    for k in range(1, kmax + 1):
        acc = acc + hcal_array(c - acc)
        if k in want:
            if k == 1:
                out[k] = (acc.copy(), False, 0.0)
            else:
                clipped_arr, changed = clip_negative_eigenvalues_array(acc)
                if changed:
                    drift = float(np.abs(np.diag(clipped_arr) - np.diag(acc)).max())
                    out[k] = (clipped_arr, True, drift)
                else:
                    out[k] = (acc.copy(), False, 0.0)
    return out


def _wrap_filtered(arr: np.ndarray, order: int, clipped: bool, drift: float,
                   labels=None) -> FilteredCorrelation:
    role = "correlation"
    if np.abs(np.diag(arr) - 1.0).max(initial=0.0) > 1e-9 or np.abs(arr).max(initial=0.0) > 1.0 + 1e-12:
        role = "generic"
    return FilteredCorrelation(
        matrix=SymmetricMatrix(arr, role=role, labels=labels),
        order=order,
        clipped=clipped,
        diagonal_drift=drift,
    )


def k_hcal_profile(c, orders) -> dict[int, FilteredCorrelation]:
    """Filtered matrices at several orders from a single recursion pass."""
    labels = c.labels if isinstance(c, SymmetricMatrix) else None
    a = _check_correlation_input(c)
    raw = k_hcal_profile_arrays(a, orders)
    return {k: _wrap_filtered(arr, k, clipped, drift, labels)
            for k, (arr, clipped, drift) in raw.items()}


def k_hcal(c, k: int) -> FilteredCorrelation:
    """Order-k recursive filter of a correlation matrix.

    Order 1 is the plain dendrogram filter and preserves the unit diagonal
    exactly; higher orders add filtered residues and are PSD-projected.
    """
    return k_hcal_profile(c, [k])[k]


def hcal(c) -> SymmetricMatrix:
    """Order-1 dendrogram filter."""
    return k_hcal(c, 1).matrix


def save_dendrogram_csv(dend: Dendrogram, path) -> None:
    """Write merges as CSV rows (step, left_members, right_members, height)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "left_members", "right_members", "height"])
        for step, m in enumerate(dend.merges):
            left = ";".join(str(i) for i in dend.members_of(m.left))
            right = ";".join(str(i) for i in dend.members_of(m.right))
            writer.writerow([step, left, right, repr(m.height)])
