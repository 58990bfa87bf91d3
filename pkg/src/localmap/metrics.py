"""Evaluation metrics and the NN/FP edge-ratio simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Stream, seeded_rng

__all__ = [
    "silhouette",
    "silhouette_samples",
    "posthoc_knn_accuracy",
    "stratified_split",
    "estimate_d_adj",
    "SimulationResult",
    "edge_ratio_simulation",
]

_BLOCK = 256


def _classes(labels, n):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"labels must have length {n}")
    classes, codes = np.unique(labels, return_inverse=True)
    return classes, codes


def _block_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def silhouette_samples(Y, labels) -> np.ndarray:
    """Per-point silhouette values; points in singleton classes get 0."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    classes, codes = _classes(labels, n)
    m = len(classes)
    if m < 2:
        raise ValueError("silhouette needs at least two classes (single class given)")
    sizes = np.bincount(codes, minlength=m).astype(np.float64)
    onehot = np.zeros((n, m))
    onehot[np.arange(n), codes] = 1.0
    out = np.zeros(n)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        D = _block_dist(Y[start:stop], Y)
        D[np.arange(stop - start), np.arange(start, stop)] = 0.0
        sums = D @ onehot
        own = codes[start:stop]
        rows = np.arange(stop - start)
        own_size = sizes[own]
        a = sums[rows, own] / np.maximum(own_size - 1.0, 1.0)
        means = sums / sizes[None, :]
        means[rows, own] = np.inf
        b = means.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        s[own_size == 1] = 0.0
        out[start:stop] = s
    return out


def silhouette(Y, labels) -> float:
    """Mean silhouette with Euclidean distance and class labels as clusters."""
    return float(np.clip(silhouette_samples(Y, labels).mean(), -1.0, 1.0))


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0):
    """Seeded per-class shuffle; every class keeps at least one training point."""
    labels = np.asarray(labels)
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = seeded_rng(seed, Stream.SPLIT)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        n_test = min(int(round(test_fraction * len(idx))), len(idx) - 1)
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _vote(nbr_labels: np.ndarray, nbr_dist: np.ndarray) -> np.ndarray:
    out = np.empty(len(nbr_labels), dtype=nbr_labels.dtype)
    for r, (lab, dist) in enumerate(zip(nbr_labels, nbr_dist)):
        uniq, counts = np.unique(lab, return_counts=True)
        tied = uniq[counts == counts.max()]
        if len(tied) == 1:
            out[r] = tied[0]
            continue
        mean_d = np.array([dist[lab == t].mean() for t in tied])
        # np.unique sorts, so argmin picks the lowest label among equal means
        out[r] = tied[np.argmin(mean_d)]
    return out


def posthoc_knn_accuracy(Y, labels, k: int = 5, test_fraction: float = 0.2, seed: int = 0) -> float:
    """Held-out accuracy of a majority-vote k-NN classifier on the embedding.

    Vote ties go to the class with the smaller mean neighbour distance, then
    to the lower label.
    """
    Y = np.asarray(Y, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (Y.shape[0],):
        raise ValueError("labels must have one entry per point")
    train, test = stratified_split(labels, test_fraction, seed)
    if not len(test) or not len(train):
        raise ValueError("degenerate split: empty train or test set")
    k = min(k, len(train))
    correct = 0
    for start in range(0, len(test), _BLOCK):
        rows = test[start:start + _BLOCK]
        diff = Y[rows][:, None, :] - Y[train][None, :, :]
        D = np.sqrt(np.sum(diff * diff, axis=2))
        order = np.lexsort((np.broadcast_to(train, D.shape), D), axis=1)[:, :k]
        pred = _vote(labels[train][order], np.take_along_axis(D, order, axis=1))
        correct += int(np.sum(pred == labels[rows]))
    return correct / len(test)


def estimate_d_adj(Y, labels) -> float:
    """Mean over classes of the distance from its centroid to the nearest other centroid."""
    Y = np.asarray(Y, dtype=np.float64)
    classes, codes = _classes(labels, Y.shape[0])
    if len(classes) < 2:
        raise ValueError("estimating d_adj needs at least two classes")
    centroids = np.array([Y[codes == c].mean(axis=0) for c in range(len(classes))])
    D = np.sqrt(((centroids[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(D, np.inf)
    return float(D.min(axis=1).mean())


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    std: float
    ratios: np.ndarray
    predicted: float


def edge_ratio_simulation(n: int, n_clusters: int, p_nn: float, n_FP: int, seeds: int,
                          seed: int = 0) -> SimulationResult:
    """Monte-Carlo of cross-cluster NN/FP edge counts under a constant-probability model.

    Every cross-cluster point pair is an NN edge independently with
    probability ``p_nn``; every point draws ``n_FP`` distinct partners
    uniformly from the other points.  Each replicate's ratio is the mean over
    cluster pairs of NN count / FP count.  ``predicted`` is ``n*p_nn/(2*n_FP)``.
    """
    if n_clusters < 2 or n % n_clusters:
        raise ValueError("need at least two equal-size clusters")
    if not 0 <= p_nn < 1:
        raise ValueError("p_nn must lie in [0, 1)")
    if not 1 <= n_FP <= n - 1 or seeds < 1:
        raise ValueError("infeasible n_FP or seed count")
    size = n // n_clusters
    rng = seeded_rng(seed, Stream.SIMULATION)
    iu = np.triu_indices(n_clusters, k=1)
    ratios = np.empty(seeds)
    for r in range(seeds):
        nn = rng.binomial(size * size, p_nn, size=len(iu[0]))
        fp = np.zeros((n_clusters, n_clusters), dtype=np.int64)
        for a in range(n_clusters):
            colors = np.full(n_clusters, size, dtype=np.int64)
            colors[a] -= 1
            draws = rng.multivariate_hypergeometric(colors, n_FP, size=size)
            fp[a] = draws.sum(axis=0)
        cross = (fp + fp.T)[iu]
        ratios[r] = np.mean(nn / cross)
    return SimulationResult(float(ratios.mean()), float(ratios.std(ddof=1)) if seeds > 1 else 0.0,
                            ratios, n * p_nn / (2.0 * n_FP))
