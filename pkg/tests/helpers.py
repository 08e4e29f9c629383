"""Shared test fixtures: an independent average-linkage reference and panel makers.

The reference linkage recomputes every cluster distance from the original
dissimilarity matrix (mean over all cross pairs) instead of the incremental
Lance-Williams update used by the library, so agreement between the two is a
meaningful cross-check rather than a tautology.
"""
from __future__ import annotations

import numpy as np


def ref_average_linkage(dist: np.ndarray):
    """Naive average-linkage agglomeration.

    Returns a list of (low_id, high_id, new_id, height, members) tuples.
    Leaves are 0..n-1, merged clusters take ids n, n+1, ... in order.
    Ties break on the lexicographically smallest (low_id, high_id) pair.
    """
    n = dist.shape[0]
    clusters: dict[int, frozenset[int]] = {i: frozenset((i,)) for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        ids = sorted(clusters)
        for a_pos, a in enumerate(ids):
            for b in ids[a_pos + 1:]:
                ma, mb = clusters[a], clusters[b]
                d = np.mean([dist[i, j] for i in ma for j in mb])
                if best is None or d < best[0] - 1e-300 or (d == best[0] and (a, b) < best[1:3]):
                    best = (d, a, b)
        d, a, b = best
        members = clusters.pop(a) | clusters.pop(b)
        clusters[next_id] = members
        merges.append((a, b, next_id, float(d), members))
        next_id += 1
    return merges


def ref_hcal(corr: np.ndarray) -> np.ndarray:
    """Filtered matrix from the reference linkage: each pair gets 1 - h at the
    merge that first joins it; diagonal copied from the input."""
    merges = ref_average_linkage(1.0 - corr)
    out = np.zeros_like(corr)
    np.fill_diagonal(out, np.diag(corr))
    # fill at the merge joining each pair: walk merges in order, only write
    # pairs that cross the two merged children
    clusters: dict[int, frozenset[int]] = {i: frozenset((i,)) for i in range(corr.shape[0])}
    for a, b, new_id, h, members in merges:
        for i in clusters[a]:
            for j in clusters[b]:
                out[i, j] = out[j, i] = 1.0 - h
        clusters[new_id] = clusters.pop(a) | clusters.pop(b)
    return out


def random_correlation(n: int, t: int, seed: int) -> np.ndarray:
    """Correlation matrix of an (n, t) standard normal draw."""
    r = np.random.default_rng(seed).standard_normal((n, t))
    c = np.corrcoef(r)
    np.fill_diagonal(c, 1.0)
    return c


def random_spd(n: int, seed: int, t: int | None = None) -> np.ndarray:
    """Well-conditioned covariance from t >= n normal draws."""
    t = 4 * n if t is None else t
    r = np.random.default_rng(seed).standard_normal((n, t))
    return r @ r.T / t + 1e-6 * np.eye(n)


def simplex_grid_best(sigma: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """Exhaustive long-only minimizer on the n=3 simplex grid."""
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    w1, w2 = np.meshgrid(ticks, ticks, indexing="ij")
    keep = w1 + w2 <= 1.0 + 1e-12
    w1, w2 = w1[keep], w2[keep]
    w = np.column_stack([w1, w2, 1.0 - w1 - w2])
    var = np.einsum("ij,jk,ik->i", w, sigma, w)
    return w[np.argmin(var)]


def kkt_residual(sigma: np.ndarray, w: np.ndarray) -> float:
    """Scaled stationarity violation for the long-only problem."""
    grad = 2.0 * sigma @ w
    mu = float(w @ grad)
    eta = grad - mu
    scale = max(np.abs(grad).max(), 1e-30)
    free = w > 0
    viol = np.abs(eta[free]).max() if free.any() else 0.0
    clamped = ~free
    if clamped.any():
        viol = max(viol, float(np.maximum(-eta[clamped], 0.0).max()))
    return viol / scale
