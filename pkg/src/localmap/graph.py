"""Pair-graph construction in the input space and local FP resampling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DataMatrix, PairGraph, Stream, counter_randint

__all__ = [
    "knn_exact",
    "select_nn_pairs",
    "sample_mn_pairs",
    "sample_fp_pairs",
    "resample_local_fp",
    "build_pairs",
    "EdgeCount",
    "edge_counts_between",
    "cross_edge_ratio",
]

_BLOCK = 512
_MARGIN = 16


def _values(X) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.values
    arr = np.asarray(X, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def _exact_dist(values: np.ndarray, rows: np.ndarray, cand: np.ndarray) -> np.ndarray:
    diff = values[cand] - values[rows][:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def _knn_block(values, sq, sq_max, start, stop, k):
    n = values.shape[0]
    rows = np.arange(start, stop)
    d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (values[start:stop] @ values.T)
    d2[np.arange(stop - start), rows] = np.inf
    m = min(k + _MARGIN, n - 1)
    if m < n - 1:
        part = np.argpartition(d2, m, axis=1)
        cand = part[:, :m]
        bound = np.take_along_axis(d2, part[:, m:m + 1], axis=1)[:, 0]
    else:
        cand = np.argsort(d2, axis=1, kind="stable")[:, :m]
        bound = None
    dist = _exact_dist(values, rows, cand)
    order = np.lexsort((cand, dist), axis=1)
    cand = np.take_along_axis(cand, order, axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    if bound is not None:
        # expanded-form distances carry cancellation error; rows whose k-th
        # exact distance is not clearly inside the candidate set are redone
        slack = 1e-9 * (sq[start:stop] + sq_max) + 1e-300
        unsafe = dist[:, k - 1] ** 2 >= bound - slack
        for r in np.flatnonzero(unsafe):
            i = start + r
            others = np.delete(np.arange(n), i)
            full = _exact_dist(values, np.array([i]), others[None, :])[0]
            o = np.lexsort((others, full))[:k]
            cand[r, :k], dist[r, :k] = others[o], full[o]
    return cand[:, :k], dist[:, :k]


def knn_exact(X, k: int, return_distance: bool = False, threads: int = 1):
    """Exact k nearest neighbours by Euclidean distance, excluding self.

    Lists are ascending in distance with ties broken by the lower index.
    """
    values = _values(X)
    n = values.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    sq = np.sum(values * values, axis=1)
    sq_max = float(sq.max())
    bounds = [(s, min(s + _BLOCK, n)) for s in range(0, n, _BLOCK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: _knn_block(values, sq, sq_max, b[0], b[1], k), bounds))
    else:
        parts = [_knn_block(values, sq, sq_max, s, e, k) for s, e in bounds]
    idx = np.vstack([p[0] for p in parts])
    if return_distance:
        return idx, np.vstack([p[1] for p in parts])
    return idx


def select_nn_pairs(X, neighbor_lists, n_NN: int, seed: int = 0) -> np.ndarray:
    """Choose ``n_NN`` partners per point by locally scaled distance.

    The scaled distance is ``d(i, j)**2 / (sigma_i * sigma_j)`` with
    ``sigma_i`` the mean distance from ``i`` to its 4th to 6th neighbours.
    Selection is deterministic; ``seed`` is accepted for interface symmetry.
    """
    values = _values(X)
    nbrs = np.asarray(neighbor_lists, dtype=np.int64)
    n, k = nbrs.shape
    if not 1 <= n_NN <= k:
        raise ValueError(f"n_NN must be in [1, {k}], got {n_NN}")
    dist = _exact_dist(values, np.arange(n), nbrs)
    lo, hi = min(3, k - 1), min(6, k)
    sigma = np.maximum(dist[:, lo:hi].mean(axis=1), 1e-10)
    scaled = dist ** 2 / (sigma[:, None] * sigma[nbrs])
    pick = np.argsort(scaled, axis=1, kind="stable")[:, :n_NN]
    partners = np.take_along_axis(nbrs, pick, axis=1)
    anchors = np.repeat(np.arange(n), n_NN)
    return np.column_stack([anchors, partners.ravel()])


def _excluded_table(nn_pairs: np.ndarray, n: int) -> np.ndarray:
    """Pad each anchor's NN partners into an ``(n, e)`` table filled with -1."""
    nn_pairs = np.asarray(nn_pairs, dtype=np.int64).reshape(-1, 2)
    counts = np.bincount(nn_pairs[:, 0], minlength=n) if len(nn_pairs) else np.zeros(n, int)
    width = int(counts.max()) if n else 0
    table = np.full((n, max(width, 1)), -1, dtype=np.int64)
    if len(nn_pairs):
        order = np.argsort(nn_pairs[:, 0], kind="stable")
        srt = nn_pairs[order]
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        col = np.arange(len(srt)) - starts[srt[:, 0]]
        table[srt[:, 0], col] = srt[:, 1]
    return table, counts


def _draw_other(n, anchors, seed, stream, *counters):
    """Uniform index in ``[0, n)`` other than the anchor itself."""
    r = counter_randint(n - 1, seed, stream, anchors, *counters)
    return r + (r >= anchors)


def _fill_distinct(n, count, excluded, seed, stream, extra=()):
    """Per anchor, ``count`` distinct partners avoiding self and ``excluded`` rows."""
    anchors = np.arange(n)
    out = np.full((n, count), -1, dtype=np.int64)
    for slot in range(count):
        todo = anchors
        attempt = 0
        while len(todo):
            cand = _draw_other(n, todo, seed, stream, *extra, slot, attempt)
            bad = np.any(excluded[todo] == cand[:, None], axis=1)
            if slot:
                bad |= np.any(out[todo, :slot] == cand[:, None], axis=1)
            out[todo[~bad], slot] = cand[~bad]
            todo = todo[bad]
            attempt += 1
    return out


def sample_mn_pairs(X, n_MN: int, seed: int = 0) -> np.ndarray:
    """Mid-near pairs: from 6 distinct random non-anchor points keep the 2nd nearest."""
    values = _values(X)
    n = values.shape[0]
    if n < 7:
        raise ValueError(f"mid-near sampling needs n >= 7, got {n}")
    if n_MN == 0:
        return np.zeros((0, 2), dtype=np.int64)
    anchors = np.arange(n)
    partners = np.empty((n, n_MN), dtype=np.int64)
    none = np.full((n, 1), -1, dtype=np.int64)
    for slot in range(n_MN):
        draws = _fill_distinct(n, 6, none, seed, Stream.MN, extra=(slot,))
        dist = _exact_dist(values, anchors, draws)
        order = np.lexsort((draws, dist), axis=1)
        partners[:, slot] = np.take_along_axis(draws, order[:, 1:2], axis=1)[:, 0]
    return np.column_stack([np.repeat(anchors, n_MN), partners.ravel()])


def sample_fp_pairs(X, nn_pairs, n_FP: int, seed: int = 0, iter: Optional[int] = None) -> np.ndarray:
    """Further-point pairs drawn uniformly from non-neighbours, distinct per anchor.

    ``X`` may be the data or just the point count.  Passing ``iter`` keys a
    fresh redraw for that iteration.
    """
    n = X if isinstance(X, (int, np.integer)) else _values(X).shape[0]
    excluded, counts = _excluded_table(nn_pairs, n)
    if np.any(n - 1 - counts < n_FP):
        raise ValueError(f"cannot draw {n_FP} distinct FP partners: too few eligible points")
    if n_FP == 0:
        return np.zeros((0, 2), dtype=np.int64)
    extra = () if iter is None else (iter,)
    partners = _fill_distinct(n, n_FP, excluded, seed, Stream.FP, extra=extra)
    return np.column_stack([np.repeat(np.arange(n), n_FP), partners.ravel()])


def resample_local_fp(Y, nn_pairs, n_FP: int, d_adj: float, max_attempts: int,
                      seed: int, iter: int, return_attempts: bool = False):
    """Redraw every FP slot, preferring partners within ``d_adj`` in the embedding.

    Each slot draws uniformly from non-self, non-NN points up to
    ``max_attempts`` times and takes the first candidate at distance
    ``<= d_adj``; if none qualifies the last draw is kept.  Draws are keyed by
    ``(seed, iter, anchor, slot, attempt)``.  Partners may repeat across the
    slots of one anchor.
    """
    coords = Y.coords if hasattr(Y, "coords") else np.asarray(Y, dtype=np.float64)
    n = coords.shape[0]
    excluded, counts = _excluded_table(nn_pairs, n)
    if np.any(n - 1 - counts < 1):
        raise ValueError("some anchor has no eligible FP partner")
    anchors = np.repeat(np.arange(n), n_FP)
    slots = np.tile(np.arange(n_FP), n)
    chosen = np.full(len(anchors), -1, dtype=np.int64)
    attempts = np.zeros(len(anchors), dtype=np.int64)
    active = np.arange(len(anchors))
    d_adj2 = float(d_adj) ** 2
    for attempt in range(max_attempts):
        if not len(active):
            break
        a, s = anchors[active], slots[active]
        cand = np.empty(len(active), dtype=np.int64)
        pending = np.arange(len(active))
        sub = 0
        while len(pending):
            c = _draw_other(n, a[pending], seed, Stream.LOCAL_FP, iter, s[pending], attempt, sub)
            bad = np.any(excluded[a[pending]] == c[:, None], axis=1)
            cand[pending[~bad]] = c[~bad]
            pending = pending[bad]
            sub += 1
        attempts[active] += 1
        chosen[active] = cand
        diff = coords[cand] - coords[a]
        ok = np.sum(diff * diff, axis=1) <= d_adj2
        active = active[~ok]
    pairs = np.column_stack([anchors, chosen])
    return (pairs, attempts) if return_attempts else pairs


def build_pairs(X: DataMatrix, n_NN: int, n_MN: int, n_FP: int, seed: int = 0,
                threads: int = 1) -> PairGraph:
    n = X.rows
    k = min(n_NN + 50, n - 1)
    nbrs = knn_exact(X, k, threads=threads)
    nn = select_nn_pairs(X, nbrs, n_NN, seed)
    mn = sample_mn_pairs(X, n_MN, seed) if n_MN else np.zeros((0, 2), dtype=np.int64)
    fp = sample_fp_pairs(X, nn, n_FP, seed)
    return PairGraph(nn, mn, fp)


@dataclass(frozen=True)
class EdgeCount:
    nn: int
    fp: int
    ratio: Optional[float]


def _cross_counts(pairs: np.ndarray, labels: np.ndarray, m: int) -> np.ndarray:
    if not len(pairs):
        return np.zeros((m, m), dtype=np.int64)
    a, b = labels[pairs[:, 0]], labels[pairs[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.bincount(lo * m + hi, minlength=m * m).reshape(m, m)


def edge_counts_between(pairs: PairGraph, labels) -> dict:
    """NN and FP edge counts for every unordered pair of distinct clusters.

    Keys are ``(a, b)`` label pairs with ``a < b``.  ``ratio`` is NN/FP, or
    ``None`` when no FP edge crosses the pair.
    """
    if labels is None:
        raise ValueError("edge counting requires class labels")
    labels = np.asarray(labels)
    classes, codes = np.unique(labels, return_inverse=True)
    m = len(classes)
    nn = _cross_counts(pairs.nn_pairs, codes, m)
    fp = _cross_counts(pairs.fp_pairs, codes, m)
    out = {}
    for a in range(m):
        for b in range(a + 1, m):
            ratio = nn[a, b] / fp[a, b] if fp[a, b] else None
            out[(classes[a].item(), classes[b].item())] = EdgeCount(int(nn[a, b]), int(fp[a, b]), ratio)
    return out


def cross_edge_ratio(pairs: PairGraph, labels) -> Optional[float]:
    """Total cross-cluster NN edges over total cross-cluster FP edges."""
    counts = edge_counts_between(pairs, labels).values()
    nn = sum(c.nn for c in counts)
    fp = sum(c.fp for c in counts)
    return nn / fp if fp else None
