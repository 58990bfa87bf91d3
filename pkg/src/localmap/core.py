"""Shared types, configuration and the counter-based random number contract."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "DataMatrix",
    "EmbeddingState",
    "PairGraph",
    "LocalMapConfig",
    "MetricsReport",
    "config_violations",
    "validate_config",
    "seeded_rng",
    "counter_uniform",
    "counter_randint",
    "Stream",
]


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    The individual messages are kept in ``violations``.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x D`` real matrix, one sample per row, with optional labels."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        n, d = values.shape
        if n < 2 or d < 1:
            raise ValueError(f"need n >= 2 and D >= 1, got {n}x{d}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"labels must have length {n}, got shape {labels.shape}")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass
class EmbeddingState:
    """Low-dimensional coordinates plus Adam moment buffers."""

    coords: np.ndarray
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None
    step_count: int = 0

    def __post_init__(self):
        self.coords = np.array(self.coords, dtype=np.float64)
        if self.adam_m is None:
            self.adam_m = np.zeros_like(self.coords)
        if self.adam_v is None:
            self.adam_v = np.zeros_like(self.coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def copy(self) -> "EmbeddingState":
        return EmbeddingState(self.coords.copy(), self.adam_m.copy(),
                              self.adam_v.copy(), self.step_count)


def _as_pairs(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return arr.reshape(-1, 2)


@dataclass(frozen=True)
class PairGraph:
    """NN, mid-near and further-point pairs stored as ``(m, 2)`` index arrays.

    Column 0 is the anchor, column 1 the partner.
    """

    nn_pairs: np.ndarray
    mn_pairs: np.ndarray
    fp_pairs: np.ndarray

    def __post_init__(self):
        for name in ("nn_pairs", "mn_pairs", "fp_pairs"):
            object.__setattr__(self, name, _as_pairs(getattr(self, name)))

    def replace(self, **kwargs) -> "PairGraph":
        return dataclasses.replace(self, **kwargs)

    def check(self, n: int, n_nn: int, n_mn: int, n_fp: int) -> list[str]:
        """Return a list of violated invariants (empty when consistent)."""
        problems = []
        for name, pairs, count in (("nn", self.nn_pairs, n_nn),
                                   ("mn", self.mn_pairs, n_mn),
                                   ("fp", self.fp_pairs, n_fp)):
            if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
                problems.append(f"{name}: index out of range")
            if np.any(pairs[:, 0] == pairs[:, 1]):
                problems.append(f"{name}: self pair")
            per_anchor = np.bincount(pairs[:, 0], minlength=n)
            if np.any(per_anchor != count):
                problems.append(f"{name}: expected {count} partners per anchor")
        nn_keys = set(zip(self.nn_pairs[:, 0].tolist(), self.nn_pairs[:, 1].tolist()))
        if any(k in nn_keys for k in zip(self.fp_pairs[:, 0].tolist(),
                                         self.fp_pairs[:, 1].tolist())):
            problems.append("fp: partner is also an NN partner")
        return problems


@dataclass(frozen=True)
class LocalMapConfig:
    """Hyperparameters for a fit.

    Loss constants and phase weights follow PaCMAP conventions; ``d_adj`` is
    the locality radius used by the third phase.
    """

    n_NN: int = 10
    mn_ratio: float = 0.5
    fp_ratio: float = 2.0
    c_nn: float = 10.0
    c_mn: float = 10000.0
    c_fp: float = 1.0
    d_adj: float = 10.0
    phase1_iters: int = 100
    phase2_iters: int = 100
    phase3_iters: int = 250
    resample_interval: int = 10
    max_resample_attempts: int = 20
    learning_rate: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    out_dim: int = 2
    seed: int = 0
    init_mode: str = "pca"
    enable_nn_weighting: bool = True
    enable_local_fp: bool = True

    @property
    def n_MN(self) -> int:
        return int(round(self.mn_ratio * self.n_NN))

    @property
    def n_FP(self) -> int:
        return int(round(self.fp_ratio * self.n_NN))

    @property
    def total_iters(self) -> int:
        return self.phase1_iters + self.phase2_iters + self.phase3_iters

    def replace(self, **kwargs) -> "LocalMapConfig":
        return dataclasses.replace(self, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LocalMapConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        kwargs = {}
        for key, value in data.items():
            kind = known[key].type
            if kind == "bool":
                if not isinstance(value, bool):
                    raise ConfigError([f"{key} must be a boolean"])
            elif kind == "int":
                if isinstance(value, bool) or not float(value).is_integer():
                    raise ConfigError([f"{key} must be an integer"])
                value = int(value)
            elif kind == "float":
                if isinstance(value, bool):
                    raise ConfigError([f"{key} must be a number"])
                value = float(value)
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "LocalMapConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError(["config must be a JSON object"])
        return cls.from_dict(data)


def config_violations(cfg: LocalMapConfig, n: int) -> list[str]:
    """List every invariant of ``cfg`` that fails for a dataset of ``n`` rows."""
    out = []
    if not cfg.c_nn > 1:
        out.append("c_nn > 1")
    for name in ("c_mn", "c_fp", "d_adj"):
        if not getattr(cfg, name) > 0:
            out.append(f"{name} > 0")
    if cfg.n_NN < 1:
        out.append("n_NN >= 1")
    if cfg.mn_ratio < 0 or cfg.fp_ratio < 0:
        out.append("mn_ratio >= 0 and fp_ratio >= 0")
    if cfg.n_NN + 1 + cfg.n_FP > n:
        out.append(f"n_NN+1+n_FP <= n ({cfg.n_NN}+1+{cfg.n_FP} > {n})")
    if cfg.n_MN > 0 and n < 7:
        out.append("n >= 7 when mid-near pairs are requested")
    if cfg.resample_interval < 1:
        out.append("resample_interval >= 1")
    if cfg.max_resample_attempts < 1:
        out.append("max_resample_attempts >= 1")
    for name in ("phase1_iters", "phase2_iters", "phase3_iters"):
        if getattr(cfg, name) < 0:
            out.append(f"{name} >= 0")
    if cfg.total_iters < 1:
        out.append("at least one iteration")
    if not cfg.learning_rate > 0:
        out.append("learning_rate > 0")
    if not (0 <= cfg.adam_beta1 < 1 and 0 <= cfg.adam_beta2 < 1):
        out.append("adam betas in [0, 1)")
    if not cfg.adam_eps > 0:
        out.append("adam_eps > 0")
    if cfg.out_dim < 1:
        out.append("out_dim >= 1")
    if cfg.init_mode not in ("pca", "random"):
        out.append("init_mode in {pca, random}")
    return out


def validate_config(cfg: LocalMapConfig, n: int) -> LocalMapConfig:
    """Return ``cfg`` unchanged, or raise :class:`ConfigError` listing all violations."""
    problems = config_violations(cfg, n)
    if problems:
        raise ConfigError(problems)
    return cfg


@dataclass
class MetricsReport:
    silhouette: float
    wall_time_seconds: float
    config_echo: dict
    seed_echo: int
    posthoc_accuracy: Optional[float] = None
    edge_ratio: Optional[float] = None

    def __post_init__(self):
        if not -1.0 <= self.silhouette <= 1.0:
            raise ValueError(f"silhouette {self.silhouette} outside [-1, 1]")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls(**json.loads(text))


# --- random numbers -------------------------------------------------------

class Stream:
    """Purpose identifiers that separate independent random streams."""

    INIT = 1
    NN = 2
    MN = 3
    FP = 4
    LOCAL_FP = 5
    BLOBS = 6
    SPLIT = 7
    SIMULATION = 8
    PCA = 9


_MASK64 = (1 << 64) - 1


def seeded_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """A Philox generator keyed by ``(seed, stream)``.

    Philox is counter based, so the sequence depends only on the key and is
    identical across platforms.
    """
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _splitmix(x: np.ndarray) -> np.ndarray:
    # uint64 wraparound is intended
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _counter_bits(seed, stream, counters) -> np.ndarray:
    h = _splitmix(np.array(int(seed) & _MASK64, dtype=np.uint64))
    h = _splitmix(h ^ np.uint64(int(stream) & _MASK64))
    arrays = np.broadcast_arrays(*[np.asarray(c, dtype=np.int64) for c in counters])
    h = np.broadcast_to(h, arrays[0].shape if arrays else ()).copy()
    for c in arrays:
        h = _splitmix(h ^ c.astype(np.uint64))
    return h


def counter_uniform(seed: int, stream: int, *counters) -> np.ndarray:
    """Uniform ``[0, 1)`` doubles, one per broadcast element of ``counters``.

    Each value is a pure hash of ``(seed, stream, *counters)``: no state is
    carried between calls, so draws keyed by (anchor, slot, attempt) are
    reproducible regardless of evaluation order.
    """
    bits = _counter_bits(seed, stream, counters)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def counter_randint(high, seed: int, stream: int, *counters) -> np.ndarray:
    """Integers in ``[0, high)`` keyed like :func:`counter_uniform`."""
    u = counter_uniform(seed, stream, *counters)
    out = np.floor(u * np.asarray(high, dtype=np.float64)).astype(np.int64)
    return np.minimum(out, np.asarray(high, dtype=np.int64) - 1)
