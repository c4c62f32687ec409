"""Square self-organizing map layout.

A d x d Kohonen map (d = floor(sqrt(N) + 1), so there can be one cell per
neuron) is trained on the profile rows; each neuron is then placed at its
best-matching cell's integer coordinate.  Neurons colliding on one cell
are spread on a circle of radius 0.2 around it, which keeps them closer
to each other than to any neuron of a neighboring cell.
"""

from __future__ import annotations

import numpy as np

from ..errors import TopomapError
from ..nap import NapMatrix
from .base import Layout, scale_coordinates

COLLISION_RADIUS = 0.2
INITIAL_SIGMA = 1.0
INITIAL_LEARNING_RATE = 0.5


def _decay(p0: float, t: int, total: int) -> float:
    # p(t) = p0 / (1 + t / (T/2))
    return p0 / (1.0 + t / (total / 2.0))


def train_som(
    features: np.ndarray, epochs: int = 10, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Train the map and return (cell weights (d, d, F), BMU index per row).

    Training runs `epochs` shuffled full passes over the rows; learning
    rate and Gaussian neighborhood radius both decay per presented sample.
    Weights start uniform over each feature's data range.  Best-matching
    units use Euclidean distance with lowest-index tie-break.
    """
    x = np.asarray(features, dtype=np.float64)
    n, f = x.shape
    if n < 2:
        raise TopomapError("SOM needs at least 2 rows")
    d = int(np.floor(np.sqrt(n) + 1))
    rng = np.random.default_rng(seed)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    weights = rng.uniform(lo, np.where(hi > lo, hi, lo + 1.0), size=(d * d, f))

    gx, gy = np.divmod(np.arange(d * d), d)
    grid = np.stack([gx, gy], axis=1).astype(np.float64)
    sq_grid_dist = ((grid[:, None, :] - grid[None, :, :]) ** 2).sum(axis=2)

    total = epochs * n
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            row = x[i]
            lr = _decay(INITIAL_LEARNING_RATE, t, total)
            sigma = _decay(INITIAL_SIGMA, t, total)
            bmu = int(np.argmin(((weights - row) ** 2).sum(axis=1)))
            h = np.exp(-sq_grid_dist[bmu] / (2.0 * sigma * sigma))
            weights += lr * h[:, None] * (row - weights)
            t += 1

    bmus = np.array(
        [int(np.argmin(((weights - row) ** 2).sum(axis=1))) for row in x], dtype=np.intp
    )
    return weights.reshape(d, d, f), bmus


def place_on_grid(bmus: np.ndarray, grid_size: int) -> np.ndarray:
    """Integer cell coordinates with collision circles.

    Every set of >= 2 neurons sharing a cell is spread uniformly on a
    circle of radius 0.2 around the cell coordinate, starting at angle 0,
    in ascending neuron order.  All returned coordinates are distinct.
    """
    coords = np.empty((len(bmus), 2), dtype=np.float64)
    for cell in np.unique(bmus):
        idx = np.flatnonzero(bmus == cell)
        cx, cy = divmod(int(cell), grid_size)
        if len(idx) == 1:
            coords[idx[0]] = (cx, cy)
            continue
        angles = 2.0 * np.pi * np.arange(len(idx)) / len(idx)
        coords[idx, 0] = cx + COLLISION_RADIUS * np.cos(angles)
        coords[idx, 1] = cy + COLLISION_RADIUS * np.sin(angles)
    return coords


def som_positions(
    features: np.ndarray, epochs: int = 10, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unscaled) SOM coordinates plus the BMU assignment."""
    weights, bmus = train_som(features, epochs=epochs, seed=seed)
    return place_on_grid(bmus, weights.shape[0]), bmus


def layout_som(nap: NapMatrix, epochs: int = 10, seed: int = 0) -> Layout:
    raw, _ = som_positions(nap.layout_features, epochs=epochs, seed=seed)
    return Layout(
        coords=scale_coordinates(raw),
        method="som",
        seed=seed,
        neuron_ids=list(nap.neuron_ids),
        params={"epochs": epochs},
    )
