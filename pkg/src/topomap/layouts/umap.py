"""Simplified UMAP embedding of profile rows.

The pipeline follows the standard construction: k-nearest-neighbor graph
under cosine distance, fuzzy memberships from the smooth-k normalization,
probabilistic-union symmetrization, spectral initialization, and
negative-sampling SGD on the cross-entropy objective with the (a, b)
curve fitted from min_dist.  Exact parity with the reference package is
a non-goal; the SGD kernel uses an explicit xorshift generator so runs
are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.optimize import curve_fit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import TopomapError
from ..nap import NapMatrix, cosine_distance_matrix
from .base import Layout, scale_coordinates
from .pca import pca_project

DEFAULT_N_NEIGHBORS = 15
DEFAULT_MIN_DIST = 0.1
DEFAULT_EPOCHS = 500
NEGATIVE_SAMPLE_RATE = 5
INITIAL_ALPHA = 1.0
INIT_SCALE = 10.0


@lru_cache(maxsize=None)
def fit_curve_params(min_dist: float) -> tuple[float, float]:
    """Fit 1/(1+a*d^{2b}) to the target membership curve for min_dist."""
    xs = np.linspace(0.0, 3.0, 300)
    ys = np.where(xs < min_dist, 1.0, np.exp(-(xs - min_dist)))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    (a, b), _ = curve_fit(curve, xs, ys, p0=(1.0, 1.0))
    return float(a), float(b)


def _knn(dist: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the k nearest neighbors per row (no self).

    Ties broken by lowest index so the graph is deterministic.
    """
    n = dist.shape[0]
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    idx = np.empty((n, k), dtype=np.int64)
    val = np.empty((n, k))
    for i in range(n):
        order = np.lexsort((np.arange(n), masked[i]))[:k]
        idx[i] = order
        val[i] = masked[i, order]
    return idx, val


def _smooth_knn(knn_dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (rho, sigma) so that sum_j exp(-(d-rho)+/sigma) = log2(k)."""
    n, k = knn_dist.shape
    target = np.log2(k)
    rho = np.zeros(n)
    sigma = np.zeros(n)
    for i in range(n):
        d = knn_dist[i]
        positive = d[d > 0.0]
        rho[i] = positive[0] if positive.size else 0.0
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(64):
            total = np.exp(-np.maximum(d - rho[i], 0.0) / mid).sum()
            if abs(total - target) < 1e-5:
                break
            if total > target:
                hi = mid
                mid = 0.5 * (lo + hi)
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else 0.5 * (lo + hi)
        sigma[i] = max(mid, 1e-12)
    return rho, sigma


def fuzzy_graph(features: np.ndarray, n_neighbors: int) -> np.ndarray:
    """Symmetrized fuzzy membership matrix (probabilistic union)."""
    dist = cosine_distance_matrix(features)
    idx, val = _knn(dist, n_neighbors)
    rho, sigma = _smooth_knn(val)
    n = dist.shape[0]
    w = np.zeros((n, n))
    rows = np.repeat(np.arange(n), n_neighbors)
    memb = np.exp(-np.maximum(val - rho[:, None], 0.0) / sigma[:, None])
    w[rows, idx.ravel()] = memb.ravel()
    return w + w.T - w * w.T


def _spectral_init(graph: np.ndarray) -> np.ndarray:
    """Eigenvectors 2..3 of the symmetric normalized Laplacian."""
    deg = graph.sum(axis=1)
    inv_sqrt = np.where(deg > 0.0, 1.0 / np.sqrt(np.where(deg > 0.0, deg, 1.0)), 0.0)
    lap = np.eye(graph.shape[0]) - inv_sqrt[:, None] * graph * inv_sqrt[None, :]
    _, vecs = np.linalg.eigh(lap)
    return vecs[:, 1:3].copy()


@njit(cache=True)
def _clip4(v):
    if v > 4.0:
        return 4.0
    if v < -4.0:
        return -4.0
    return v


@njit(cache=True)
def _sgd(emb, head, tail, eps_per_sample, a, b, n_epochs, seed):
    """Negative-sampling SGD on the fuzzy cross-entropy.

    Attractive updates move both endpoints; each fires NEGATIVE_SAMPLE_RATE
    repulsive updates on the head against uniform random vertices.  The
    xorshift state makes the sampling sequence a pure function of seed.
    """
    n = emb.shape[0]
    n_edges = head.shape[0]
    next_sample = eps_per_sample.copy()
    state = np.uint64(2 * seed + 1)
    for _ in range(8):
        state ^= state << np.uint64(13)
        state ^= state >> np.uint64(7)
        state ^= state << np.uint64(17)
    for epoch in range(n_epochs):
        alpha = INITIAL_ALPHA * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_sample[e] > epoch:
                continue
            next_sample[e] += eps_per_sample[e]
            i = head[e]
            j = tail[e]
            dx = emb[i, 0] - emb[j, 0]
            dy = emb[i, 1] - emb[j, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2**b)
            else:
                coeff = 0.0
            gx = _clip4(coeff * dx)
            gy = _clip4(coeff * dy)
            emb[i, 0] += alpha * gx
            emb[i, 1] += alpha * gy
            emb[j, 0] -= alpha * gx
            emb[j, 1] -= alpha * gy
            for _ in range(NEGATIVE_SAMPLE_RATE):
                state ^= state << np.uint64(13)
                state ^= state >> np.uint64(7)
                state ^= state << np.uint64(17)
                k = np.int64(state % np.uint64(n))
                if k == i:
                    continue
                dx = emb[i, 0] - emb[k, 0]
                dy = emb[i, 1] - emb[k, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (1.0 + a * d2**b))
                    gx = _clip4(coeff * dx)
                    gy = _clip4(coeff * dy)
                else:
                    gx = 4.0
                    gy = 4.0
                emb[i, 0] += alpha * gx
                emb[i, 1] += alpha * gy


def umap_embed(
    features: np.ndarray,
    n_neighbors: int = DEFAULT_N_NEIGHBORS,
    min_dist: float = DEFAULT_MIN_DIST,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n <= n_neighbors:
        raise TopomapError(
            f"UMAP needs more rows than n_neighbors (got {n} rows, k={n_neighbors})"
        )
    graph = fuzzy_graph(x, n_neighbors)

    n_comp, _ = connected_components(csr_matrix(graph > 0.0), directed=False)
    if n_comp == 1:
        init = _spectral_init(graph)
    else:
        warnings.warn(
            "k-NN graph is disconnected; falling back to PCA initialization",
            stacklevel=2,
        )
        init = pca_project(x)
    peak = np.abs(init).max()
    emb = np.ascontiguousarray(init * (INIT_SCALE / peak) if peak > 0.0 else init)

    head, tail = np.nonzero(graph)
    weights = graph[head, tail]
    eps_per_sample = weights.max() / weights

    a, b = fit_curve_params(min_dist)
    _sgd(emb, head, tail, eps_per_sample, a, b, epochs, seed)
    if not np.isfinite(emb).all():
        raise TopomapError("UMAP embedding became non-finite")
    return emb


def layout_umap(
    nap: NapMatrix,
    n_neighbors: int = DEFAULT_N_NEIGHBORS,
    min_dist: float = DEFAULT_MIN_DIST,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> Layout:
    raw = umap_embed(
        nap.layout_features,
        n_neighbors=n_neighbors,
        min_dist=min_dist,
        epochs=epochs,
        seed=seed,
    )
    return Layout(
        coords=scale_coordinates(raw),
        method="umap",
        seed=seed,
        neuron_ids=list(nap.neuron_ids),
        params={"n_neighbors": n_neighbors, "min_dist": min_dist, "epochs": epochs},
    )
