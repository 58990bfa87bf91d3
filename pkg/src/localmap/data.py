"""Matrix ingestion, centering + PCA preprocessing and synthetic blob data."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataMatrix, Stream, seeded_rng

__all__ = [
    "DataFormatError",
    "BlobSpec",
    "load_csv",
    "write_csv",
    "load_binary",
    "write_binary",
    "preprocess",
    "pca",
    "generate_blobs",
]

MAGIC = b"LMAP"
VERSION = 1
_HEADER = struct.Struct("<4sIIIB3x")

# Dense covariance eigendecomposition up to this many columns.
DENSE_PCA_MAX_DIM = 512


class DataFormatError(ValueError):
    pass


def load_csv(path, has_labels: bool = False) -> DataMatrix:
    """Read a comma separated numeric matrix.

    With ``has_labels`` the last column is taken as integer class labels.
    Errors report 1-based row and column positions.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataFormatError(
                    f"{path}: ragged row {lineno}: expected {width} columns, got {len(record)}")
            parsed = []
            for col, cell in enumerate(record, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {col}") from None
                if not math.isfinite(value):
                    raise DataFormatError(
                        f"{path}: non-finite value at row {lineno}, column {col}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    arr = np.array(rows, dtype=np.float64)
    if not has_labels:
        return DataMatrix(arr)
    if arr.shape[1] < 2:
        raise DataFormatError(f"{path}: label column requested but only one column present")
    raw = arr[:, -1]
    if not np.all(raw == np.round(raw)):
        bad = int(np.flatnonzero(raw != np.round(raw))[0]) + 1
        raise DataFormatError(f"{path}: non-integer label at row {bad}, column {arr.shape[1]}")
    return DataMatrix(arr[:, :-1], raw.astype(np.int64))


def _format(value: float, digits: int) -> str:
    return format(float(value), f".{digits}g")


def write_csv(path, values, labels=None, digits: int = 9) -> None:
    """Write rows as CSV with ``digits`` significant digits; labels go last."""
    values = np.asarray(values, dtype=np.float64)
    lines = []
    for i, row in enumerate(values):
        cells = [_format(v, digits) for v in row]
        if labels is not None:
            cells.append(str(int(labels[i])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_binary(path, X: DataMatrix) -> None:
    """Write the little-endian ``LMAP`` format; values are stored as float32."""
    n, d = X.values.shape
    has_labels = X.labels is not None
    payload = [_HEADER.pack(MAGIC, VERSION, n, d, int(has_labels)),
               X.values.astype("<f4").tobytes()]
    if has_labels:
        payload.append(X.labels.astype("<i4").tobytes())
    Path(path).write_bytes(b"".join(payload))


def load_binary(path) -> DataMatrix:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n, d, has_labels = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    need = _HEADER.size + 4 * n * d + (4 * n if has_labels else 0)
    if len(blob) < need:
        raise DataFormatError(f"{path}: truncated payload ({len(blob)} of {need} bytes)")
    values = np.frombuffer(blob, dtype="<f4", count=n * d, offset=_HEADER.size).reshape(n, d)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{path}: non-finite value in payload")
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype="<i4", count=n, offset=_HEADER.size + 4 * n * d)
    return DataMatrix(values.astype(np.float64), labels)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _subspace_iteration(Xc: np.ndarray, k: int, tol: float = 1e-9, max_iter: int = 500):
    n, d = Xc.shape
    cov = Xc.T @ Xc / max(n - 1, 1)
    block = min(d, k + 10)
    rng = seeded_rng(0, Stream.PCA)
    Q, _ = np.linalg.qr(rng.standard_normal((d, block)))
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(cov @ Q)
        evals, evecs = np.linalg.eigh(Q.T @ cov @ Q)
        order = np.argsort(evals)[::-1]
        evals, V = evals[order], Q @ evecs[:, order]
        top = V[:, :k]
        resid = np.linalg.norm(cov @ top - top * evals[:k], axis=0)
        scale = max(evals[0], 1e-300)
        Q = V
        if np.all(resid <= tol * scale):
            break
    return evals[:k], top.T


def pca(X, k: int):
    """Top-``k`` principal components of ``X``.

    Returns
    -------
    scores : (n, k) array
        Centered data projected onto the components.
    components : (k, D) array
        Orthonormal rows, sorted by decreasing explained variance, each with
        its largest-magnitude entry positive.
    """
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    n, d = values.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k must be in [1, {min(n, d)}], got {k}")
    Xc = values - values.mean(axis=0)
    if d <= DENSE_PCA_MAX_DIM:
        cov = Xc.T @ Xc / max(n - 1, 1)
        evals, evecs = np.linalg.eigh(cov)
        components = evecs[:, ::-1][:, :k].T
    else:
        _, components = _subspace_iteration(Xc, k)
    components = _fix_signs(np.ascontiguousarray(components))
    return Xc @ components.T, components


def explained_variance(scores: np.ndarray) -> np.ndarray:
    return scores.var(axis=0, ddof=1)


def preprocess(X: DataMatrix, target_dim: int = 100) -> DataMatrix:
    """Mean-center, then reduce to ``target_dim`` PCA scores when ``D`` exceeds it."""
    Xc = X.values - X.values.mean(axis=0)
    if X.cols > target_dim:
        Xc, _ = pca(Xc, min(target_dim, X.rows))
    return DataMatrix(Xc, X.labels)


@dataclass(frozen=True)
class BlobSpec:
    n_clusters: int = 10
    points_per_cluster: int = 500
    dim: int = 50
    center_spread: float = 50.0
    cluster_std: float = 1.0
    bridge_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1 or self.points_per_cluster < 1 or self.dim < 1:
            raise ValueError("n_clusters, points_per_cluster and dim must be >= 1")
        if self.center_spread < 0 or self.cluster_std <= 0:
            raise ValueError("center_spread >= 0 and cluster_std > 0 required")
        if not 0 <= self.bridge_fraction <= 1:
            raise ValueError("bridge_fraction must lie in [0, 1]")

    @property
    def n_core(self) -> int:
        return self.n_clusters * self.points_per_cluster

    @property
    def n_bridge(self) -> int:
        if self.n_clusters < 2:
            return 0
        return int(round(self.n_core * self.bridge_fraction))


def generate_blobs(spec: BlobSpec, return_centers: bool = False):
    """Gaussian clusters with optional bridge points between random center pairs.

    Bridge points sit on the segment between two distinct centers and carry
    the label of the nearer center.
    """
    rng = seeded_rng(spec.seed, Stream.BLOBS)
    centers = rng.uniform(-spec.center_spread, spec.center_spread,
                          size=(spec.n_clusters, spec.dim))
    labels = np.repeat(np.arange(spec.n_clusters), spec.points_per_cluster)
    core = centers[labels] + spec.cluster_std * rng.standard_normal((spec.n_core, spec.dim))
    parts, label_parts = [core], [labels]
    if spec.n_bridge:
        a = rng.integers(0, spec.n_clusters, size=spec.n_bridge)
        b = (a + rng.integers(1, spec.n_clusters, size=spec.n_bridge)) % spec.n_clusters
        t = rng.uniform(0.0, 1.0, size=spec.n_bridge)
        bridges = (1 - t)[:, None] * centers[a] + t[:, None] * centers[b]
        d2 = ((bridges[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        parts.append(bridges)
        label_parts.append(np.argmin(d2, axis=1))
    X = DataMatrix(np.vstack(parts), np.concatenate(label_parts))
    return (X, centers) if return_centers else X
