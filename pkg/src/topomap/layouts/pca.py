"""Principal-component projection onto the two highest-variance directions."""

from __future__ import annotations

import numpy as np

from ..errors import TopomapError
from ..nap import NapMatrix
from .base import Layout, scale_coordinates


def pca_project(features: np.ndarray) -> np.ndarray:
    """Project rows onto the top-2 right singular directions.

    Rows are centered first.  The sign of each component is fixed so that
    its largest-magnitude loading is positive, which makes the projection
    reproducible across runs and platforms.  Rank-deficient input yields a
    constant second coordinate.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] < 2 or x.shape[1] < 2:
        raise TopomapError("PCA needs at least 2 rows and 2 feature columns")
    centered = x - x.mean(axis=0, keepdims=True)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2]
    for k in range(2):
        j = np.argmax(np.abs(components[k]))
        if components[k, j] < 0:
            components[k] = -components[k]
    scores = centered @ components.T
    # a numerically-zero singular value must give a constant column, not
    # float noise that downstream scaling would blow up to full range
    tol = s[0] * max(x.shape) * np.finfo(np.float64).eps
    scores[:, s[:2] <= tol] = 0.0
    return scores


def layout_pca(nap: NapMatrix, seed: int = 0) -> Layout:
    # seed is accepted for interface uniformity; the projection is deterministic
    coords = scale_coordinates(pca_project(nap.layout_features))
    return Layout(coords=coords, method="pca", seed=seed, neuron_ids=list(nap.neuron_ids))
