"""LocalMAP dimensionality reduction with PaCMAP early phases."""

from .core import (ConfigError, DataMatrix, EmbeddingState, LocalMapConfig, MetricsReport,
                   PairGraph, seeded_rng, validate_config)
from .data import BlobSpec, generate_blobs, load_binary, load_csv, pca, preprocess
from .graph import build_pairs, knn_exact
from .metrics import edge_ratio_simulation, estimate_d_adj, posthoc_knn_accuracy, silhouette
from .optim import fit

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataMatrix", "EmbeddingState", "LocalMapConfig", "MetricsReport",
    "PairGraph", "seeded_rng", "validate_config", "BlobSpec", "generate_blobs",
    "load_binary", "load_csv", "pca", "preprocess", "build_pairs", "knn_exact",
    "edge_ratio_simulation", "estimate_d_adj", "posthoc_knn_accuracy", "silhouette", "fit",
]
