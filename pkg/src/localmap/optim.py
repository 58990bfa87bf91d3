"""Losses, analytic gradients, Adam and the three-phase fit loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .core import (DataMatrix, EmbeddingState, LocalMapConfig, PairGraph, Stream,
                   seeded_rng, validate_config)
from .data import pca, preprocess
from .graph import build_pairs, resample_local_fp, sample_fp_pairs

__all__ = [
    "OptimizationError",
    "PhaseWeights",
    "pacmap_loss",
    "localmap_loss",
    "loss_grad",
    "nn_coefficient",
    "attractive_force",
    "repulsive_force",
    "force_profiles",
    "weight_schedule",
    "adam_step",
    "init_embedding",
    "RunLog",
    "fit",
]

log = logging.getLogger(__name__)


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseWeights:
    w_nn: float
    w_mn: float
    w_fp: float
    phase: int

    def __post_init__(self):
        if self.phase not in (1, 2, 3):
            raise ValueError(f"phase must be 1, 2 or 3, got {self.phase}")
        if min(self.w_nn, self.w_mn, self.w_fp) < 0:
            raise ValueError("weights must be non-negative")
        if self.phase == 3 and self.w_mn != 0:
            raise ValueError("phase 3 has no mid-near term")


def _coords(Y) -> np.ndarray:
    return Y.coords if isinstance(Y, EmbeddingState) else np.asarray(Y, dtype=np.float64)


def _dtilde(Y: np.ndarray, pairs: np.ndarray):
    diff = Y[pairs[:, 0]] - Y[pairs[:, 1]]
    return diff, np.sum(diff * diff, axis=1) + 1.0


# Per-pair terms as functions of dtilde = d**2 + 1.  Each returns the loss
# and its derivative with respect to dtilde.

def _attract(dt, c):
    return dt / (c + dt), c / (c + dt) ** 2


def _attract_weighted(dt, c, d_adj):
    root = np.sqrt(dt)
    loss = d_adj * root / (2.0 * (c + dt))
    dloss = d_adj * (c - dt) / (4.0 * root * (c + dt) ** 2)
    return loss, dloss


def _repel(dt, c):
    return 1.0 / (c + dt), -1.0 / (c + dt) ** 2


def _terms(Y, pairs: PairGraph, w: PhaseWeights, cfg: LocalMapConfig, mode: str):
    if mode not in ("pacmap", "localmap"):
        raise ValueError(f"mode must be 'pacmap' or 'localmap', got {mode!r}")
    out = []
    diff, dt = _dtilde(Y, pairs.nn_pairs)
    if mode == "localmap" and cfg.enable_nn_weighting:
        loss, dloss = _attract_weighted(dt, cfg.c_nn, cfg.d_adj)
    else:
        loss, dloss = _attract(dt, cfg.c_nn)
    weight_nn = 1.0 if mode == "localmap" else w.w_nn
    out.append((pairs.nn_pairs, diff, weight_nn * loss, weight_nn * dloss))
    if mode == "pacmap" and w.w_mn:
        diff, dt = _dtilde(Y, pairs.mn_pairs)
        loss, dloss = _attract(dt, cfg.c_mn)
        out.append((pairs.mn_pairs, diff, w.w_mn * loss, w.w_mn * dloss))
    diff, dt = _dtilde(Y, pairs.fp_pairs)
    loss, dloss = _repel(dt, cfg.c_fp)
    weight_fp = 1.0 if mode == "localmap" else w.w_fp
    out.append((pairs.fp_pairs, diff, weight_fp * loss, weight_fp * dloss))
    return out


def pacmap_loss(Y, pairs: PairGraph, w: PhaseWeights, cfg: LocalMapConfig) -> float:
    """Weighted sum of the NN, mid-near and FP terms on ``dtilde = d**2 + 1``."""
    return float(sum(t[2].sum() for t in _terms(_coords(Y), pairs, w, cfg, "pacmap")))


def localmap_loss(Y, pairs: PairGraph, cfg: LocalMapConfig) -> float:
    """Third-phase loss: distance-weighted NN attraction plus FP repulsion.

    With ``enable_nn_weighting`` off the NN term is the unweighted PaCMAP form.
    """
    w = PhaseWeights(1.0, 0.0, 1.0, 3)
    return float(sum(t[2].sum() for t in _terms(_coords(Y), pairs, w, cfg, "localmap")))


def _accumulate(n: int, dim: int, terms) -> np.ndarray:
    grad = np.zeros((n, dim))
    for pr, diff, _, dloss in terms:
        if not len(pr):
            continue
        contrib = (2.0 * dloss)[:, None] * diff
        idx = np.concatenate([pr[:, 0], pr[:, 1]])
        for c in range(dim):
            vals = np.concatenate([contrib[:, c], -contrib[:, c]])
            grad[:, c] += np.bincount(idx, weights=vals, minlength=n)
    return grad


def loss_grad(Y, pairs: PairGraph, w: Optional[PhaseWeights], cfg: LocalMapConfig,
              mode: str = "pacmap", return_loss: bool = False):
    """Analytic gradient of the selected loss with respect to every coordinate.

    Each pair adds its force to the anchor and the opposite force to the
    partner, so columns of the result sum to zero.
    """
    Y = _coords(Y)
    if w is None:
        w = PhaseWeights(1.0, 0.0, 1.0, 3)
    terms = _terms(Y, pairs, w, cfg, mode)
    grad = _accumulate(Y.shape[0], Y.shape[1], terms)
    if return_loss:
        return grad, float(sum(t[2].sum() for t in terms))
    return grad


def nn_coefficient(d, d_adj: float):
    """Multiplier applied to NN attraction: ``d_adj / (2 sqrt(d**2 + 1))``."""
    return d_adj / (2.0 * np.sqrt(np.asarray(d, dtype=np.float64) ** 2 + 1.0))


def attractive_force(d, cfg: LocalMapConfig):
    """Derivative of the weighted NN per-pair loss with respect to distance."""
    d = np.asarray(d, dtype=np.float64)
    _, dloss = _attract_weighted(d * d + 1.0, cfg.c_nn, cfg.d_adj)
    return 2.0 * d * dloss


def repulsive_force(d, cfg: LocalMapConfig):
    """Negated derivative of the FP per-pair loss with respect to distance."""
    d = np.asarray(d, dtype=np.float64)
    _, dloss = _repel(d * d + 1.0, cfg.c_fp)
    return -2.0 * d * dloss


def force_profiles(cfg: LocalMapConfig, d_max: float = 20.0, samples: int = 2000):
    """Sample both force curves on a uniform grid over ``(0, d_max]``.

    Returns ``(d, f(d))`` and ``(d, g(d))``.
    """
    d = np.linspace(d_max / samples, d_max, samples)
    return (d, attractive_force(d, cfg)), (d, repulsive_force(d, cfg))


def weight_schedule(iter: int, cfg: LocalMapConfig) -> PhaseWeights:
    """Phase weights for iteration ``iter``.

    Phase 1 ramps the mid-near weight linearly from 1000 to 3; phase 2 holds
    (3, 3, 1); phase 3 drops the mid-near term.
    """
    if not 0 <= iter < cfg.total_iters:
        raise ValueError(f"iteration {iter} outside [0, {cfg.total_iters})")
    if iter < cfg.phase1_iters:
        t = iter / cfg.phase1_iters
        return PhaseWeights(2.0, (1.0 - t) * 1000.0 + t * 3.0, 1.0, 1)
    if iter < cfg.phase1_iters + cfg.phase2_iters:
        return PhaseWeights(3.0, 3.0, 1.0, 2)
    return PhaseWeights(1.0, 0.0, 1.0, 3)


def adam_step(state: EmbeddingState, grad: np.ndarray, cfg: LocalMapConfig) -> EmbeddingState:
    """One bias-corrected Adam update, in place on ``state``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.coords.shape:
        raise ValueError(f"gradient shape {grad.shape} != coords shape {state.coords.shape}")
    if not np.all(np.isfinite(grad)):
        bad = np.argwhere(~np.isfinite(grad))[0]
        raise OptimizationError(
            f"non-finite gradient at step {state.step_count + 1}, entry {tuple(bad.tolist())}")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.step_count += 1
    t = state.step_count
    state.adam_m *= b1
    state.adam_m += (1.0 - b1) * grad
    state.adam_v *= b2
    state.adam_v += (1.0 - b2) * grad * grad
    m_hat = state.adam_m / (1.0 - b1 ** t)
    v_hat = state.adam_v / (1.0 - b2 ** t)
    state.coords -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return state


def init_embedding(X, cfg: LocalMapConfig) -> EmbeddingState:
    """PCA scores scaled by 0.01, or Gaussian noise with std 1e-4."""
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    n, d = values.shape
    if cfg.init_mode == "pca":
        k = min(cfg.out_dim, d, n)
        scores, _ = pca(values, k)
        coords = np.zeros((n, cfg.out_dim))
        coords[:, :k] = 0.01 * scores
    elif cfg.init_mode == "random":
        coords = 1e-4 * seeded_rng(cfg.seed, Stream.INIT).standard_normal((n, cfg.out_dim))
    else:
        raise ValueError(f"unknown init_mode {cfg.init_mode!r}")
    return EmbeddingState(coords)


@dataclass
class RunLog:
    """Loss every ``log_every`` iterations plus one record per FP resampling."""

    records: list = field(default_factory=list)
    pairs: Optional[PairGraph] = field(default=None, repr=False, compare=False)

    def add(self, iter: int, phase: int, loss: Optional[float], event: str) -> None:
        self.records.append({"iter": int(iter), "phase": int(phase),
                             "loss": None if loss is None else float(loss), "event": event})

    def losses(self, phase: Optional[int] = None) -> list:
        return [(r["iter"], r["loss"]) for r in self.records
                if r["event"] == "loss" and (phase is None or r["phase"] == phase)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "RunLog":
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])


LOG_EVERY = 10


def fit(X: DataMatrix, cfg: LocalMapConfig, threads: int = 1, pairs: Optional[PairGraph] = None):
    """Embed ``X``: PaCMAP phases 1 and 2 followed by the local third phase.

    Labels on ``X`` are ignored.  Returns ``(state, run_log)``; the graph in
    effect at the end of the run is kept on ``run_log.pairs``.
    """
    validate_config(cfg, X.rows)
    Xp = preprocess(DataMatrix(X.values))
    if pairs is None:
        pairs = build_pairs(Xp, cfg.n_NN, cfg.n_MN, cfg.n_FP, cfg.seed, threads=threads)
    state = init_embedding(Xp, cfg)
    runlog = RunLog()
    p3_start = cfg.phase1_iters + cfg.phase2_iters
    for it in range(cfg.total_iters):
        w = weight_schedule(it, cfg)
        if w.phase == 3:
            k = it - p3_start
            if k % cfg.resample_interval == 0:
                if cfg.enable_local_fp:
                    fp = resample_local_fp(state, pairs.nn_pairs, cfg.n_FP, cfg.d_adj,
                                           cfg.max_resample_attempts, cfg.seed, it)
                    event = "resample_local_fp"
                else:
                    fp = sample_fp_pairs(X.rows, pairs.nn_pairs, cfg.n_FP, cfg.seed, iter=it)
                    event = "resample_fp"
                pairs = pairs.replace(fp_pairs=fp)
                runlog.add(it, 3, None, event)
            grad, loss = loss_grad(state, pairs, w, cfg, "localmap", return_loss=True)
        else:
            grad, loss = loss_grad(state, pairs, w, cfg, "pacmap", return_loss=True)
        if not math.isfinite(loss):
            raise OptimizationError(f"non-finite loss at iteration {it}")
        if it % LOG_EVERY == 0 or it == cfg.total_iters - 1:
            runlog.add(it, w.phase, loss, "loss")
        try:
            adam_step(state, grad, cfg)
        except OptimizationError as exc:
            raise OptimizationError(f"iteration {it}: {exc}") from None
        if not np.all(np.isfinite(state.coords)):
            raise OptimizationError(f"non-finite coordinates after iteration {it}")
    runlog.pairs = pairs
    return state, runlog
