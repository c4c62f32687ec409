"""Co-activation graph layout.

Neurons become nodes; the most similar pairs (smallest cosine distances)
become edges.  Disconnected components are linked to the largest one via
their most similar cross pair, and the connected graph is laid out with
the Fruchterman-Reingold force-directed algorithm.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import TopomapError
from ..nap import NapMatrix, cosine_distance_matrix
from .base import Layout, scale_coordinates

DEFAULT_EDGE_FRACTION = 0.075
DEFAULT_FR_ITERATIONS = 50
FR_INITIAL_TEMPERATURE = 0.1


def threshold_edges(dist: np.ndarray, edge_fraction: float) -> np.ndarray:
    """The ceil(edge_fraction * N(N-1)/2) smallest-distance pairs.

    Ties are broken by lexicographic (i, j) order, so the edge set is a
    deterministic function of the distance matrix.
    """
    n = dist.shape[0]
    if not 0.0 < edge_fraction < 1.0:
        raise TopomapError("edge_fraction must lie strictly between 0 and 1")
    iu, ju = np.triu_indices(n, k=1)
    m = math.ceil(edge_fraction * n * (n - 1) / 2)
    order = np.lexsort((ju, iu, dist[iu, ju]))
    keep = order[:m]
    return np.stack([iu[keep], ju[keep]], axis=1)


def link_components(dist: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bridge every smaller component to the largest one.

    Each non-largest component contributes one extra edge: its most
    similar (minimum-distance) pair with the largest component, ties
    broken lexicographically.
    """
    n = dist.shape[0]
    adj = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    n_comp, labels = connected_components(adj, directed=False)
    if n_comp == 1:
        return edges
    largest = int(np.bincount(labels).argmax())
    main = np.flatnonzero(labels == largest)
    bridges = []
    for comp in range(n_comp):
        if comp == largest:
            continue
        members = np.flatnonzero(labels == comp)
        sub = dist[np.ix_(members, main)]
        flat = int(np.argmin(sub))  # argmin is lexicographic-first on ties
        a = int(members[flat // len(main)])
        b = int(main[flat % len(main)])
        bridges.append((min(a, b), max(a, b)))
    return np.vstack([edges, np.array(bridges, dtype=edges.dtype)])


def build_coactivation_graph(
    dist: np.ndarray, edge_fraction: float = DEFAULT_EDGE_FRACTION
) -> np.ndarray:
    """Edge list (m, 2) of the thresholded graph, made connected."""
    return link_components(dist, threshold_edges(dist, edge_fraction))


def fruchterman_reingold(
    n: int,
    edges: np.ndarray,
    iterations: int = DEFAULT_FR_ITERATIONS,
    seed: int = 0,
) -> np.ndarray:
    """Classic force-directed placement on the unit square.

    Optimal pair distance k = sqrt(area / n) with area 1; displacements
    are capped by a temperature that cools linearly from 0.1 to 0 over
    the iterations.  Positions start uniform random from the seed.
    """
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    k = math.sqrt(1.0 / n)
    ei = edges[:, 0]
    ej = edges[:, 1]
    for it in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        d = np.linalg.norm(delta, axis=2)
        np.fill_diagonal(d, 1.0)
        d = np.maximum(d, 1e-12)
        # repulsion k^2/d between all pairs (self term vanishes: delta_ii = 0)
        disp = ((delta / d[:, :, None]) * (k * k / d)[:, :, None]).sum(axis=1)
        # attraction d^2/k along edges
        evec = pos[ei] - pos[ej]
        ed = np.maximum(np.linalg.norm(evec, axis=1), 1e-12)
        pull = evec * (ed / k)[:, None]
        np.subtract.at(disp, ei, pull)
        np.add.at(disp, ej, pull)
        t = FR_INITIAL_TEMPERATURE * (1.0 - it / iterations)
        norm = np.maximum(np.linalg.norm(disp, axis=1), 1e-12)
        pos += disp / norm[:, None] * np.minimum(norm, t)[:, None]
    return pos


def layout_graph(
    nap: NapMatrix,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
    fr_iterations: int = DEFAULT_FR_ITERATIONS,
    seed: int = 0,
) -> Layout:
    dist = cosine_distance_matrix(nap.layout_features)
    edges = build_coactivation_graph(dist, edge_fraction)
    raw = fruchterman_reingold(nap.n_neurons, edges, iterations=fr_iterations, seed=seed)
    return Layout(
        coords=scale_coordinates(raw),
        method="graph",
        seed=seed,
        neuron_ids=list(nap.neuron_ids),
        params={"edge_fraction": edge_fraction, "fr_iterations": fr_iterations},
    )
