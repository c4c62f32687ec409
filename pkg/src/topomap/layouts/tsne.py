"""t-SNE embedding of profile rows, initialized from the PCA projection.

Plain Barnes-Hut-free implementation: per-point bandwidths found by
binary search to match the target perplexity, symmetrized affinities,
early exaggeration, and momentum gradient descent.  Because the embedding
starts from the deterministic PCA projection, the result is reproducible
without any random state.
"""

from __future__ import annotations

import numpy as np

from ..errors import TopomapError
from ..nap import NapMatrix
from .base import Layout, scale_coordinates
from .pca import pca_project

DEFAULT_PERPLEXITY = 30.0
DEFAULT_ITERATIONS = 1000
EARLY_EXAGGERATION = 12.0
EXAGGERATION_STOP = 250
LEARNING_RATE = 200.0
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
INIT_STD = 1e-4


def _conditional_affinities(sq_dist: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic P with per-row precision matched to the perplexity."""
    n = sq_dist.shape[0]
    target = np.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        di = np.delete(sq_dist[i], i)
        for _ in range(64):
            w = np.exp(-di * beta)
            sw = w.sum()
            if sw <= 0:
                h = 0.0
                w = np.zeros_like(w)
            else:
                h = np.log(sw) + beta * (di * w).sum() / sw
                w = w / sw
            if abs(h - target) < 1e-7:
                break
            if h > target:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else 0.5 * (beta + beta_max)
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else 0.5 * (beta + beta_min)
        p[i, np.arange(n) != i] = w
    return p


def tsne_embed(
    features: np.ndarray,
    perplexity: float = DEFAULT_PERPLEXITY,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise TopomapError("t-SNE needs at least 4 rows")
    perplexity = min(perplexity, (n - 1) / 3.0)

    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    cond = _conditional_affinities(sq, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    proj = pca_project(x)
    std0 = proj[:, 0].std()
    if std0 > 0:
        y = proj / std0 * INIT_STD
    else:
        y = np.random.default_rng(seed).normal(scale=INIT_STD, size=(n, 2))

    velocity = np.zeros_like(y)
    for it in range(iterations):
        p_eff = p * EARLY_EXAGGERATION if it < EXAGGERATION_STOP else p
        momentum = MOMENTUM_EARLY if it < EXAGGERATION_STOP else MOMENTUM_LATE

        diff = y[:, None, :] - y[None, :, :]
        num = 1.0 / (1.0 + (diff**2).sum(axis=2))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)

        grad = 4.0 * (((p_eff - q) * num)[:, :, None] * diff).sum(axis=1)
        if not np.isfinite(grad).all():
            raise TopomapError(
                f"t-SNE gradient became non-finite at iteration {it} "
                "(degenerate affinities)"
            )
        velocity = momentum * velocity - LEARNING_RATE * grad
        y = y + velocity
        y = y - y.mean(axis=0, keepdims=True)
    return y


def layout_tsne(
    nap: NapMatrix,
    perplexity: float = DEFAULT_PERPLEXITY,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> Layout:
    raw = tsne_embed(nap.layout_features, perplexity=perplexity, iterations=iterations, seed=seed)
    return Layout(
        coords=scale_coordinates(raw),
        method="tsne",
        seed=seed,
        neuron_ids=list(nap.neuron_ids),
        params={"perplexity": perplexity, "iterations": iterations},
    )
