"""Synthetic activations with planted co-activation clusters.

Neuron n belongs to cluster n % n_clusters; examples of group g activate
exactly the neurons of cluster g % n_clusters (amplitude 1) plus Gaussian
noise.  At noise 0 the profile rows within a cluster are identical, so
any similarity-driven layout must place each cluster together; this makes
desk-scale end-to-end checks possible without a trained model.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import TopomapError
from .nap import DEFAULT_SAMPLES_PER_GROUP, ActivationSet, save_activation_set

DEFAULT_NEURONS = 128
DEFAULT_GROUPS = 10
DEFAULT_CLUSTERS = 4
DEFAULT_NOISE = 0.1


def synth_activations(
    n_neurons: int = DEFAULT_NEURONS,
    n_groups: int = DEFAULT_GROUPS,
    n_clusters: int = DEFAULT_CLUSTERS,
    noise: float = DEFAULT_NOISE,
    examples_per_group: int = DEFAULT_SAMPLES_PER_GROUP,
    seed: int = 0,
) -> ActivationSet:
    if n_neurons < 2 or n_groups < 1 or examples_per_group < 1:
        raise TopomapError("invalid synthetic sizes")
    if not 1 <= n_clusters <= n_neurons:
        raise TopomapError("n_clusters must be between 1 and n_neurons")
    if noise < 0:
        raise TopomapError("noise must be nonnegative")
    labels = np.repeat(np.arange(n_groups), examples_per_group)
    neuron_cluster = np.arange(n_neurons) % n_clusters
    active = (labels % n_clusters)[:, None] == neuron_cluster[None, :]
    values = active.astype(np.float64)
    if noise > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise, size=values.shape)
    return ActivationSet(
        layer_kind="dense",
        values=values.astype(np.float32),
        group_labels=labels,
        layer_name=f"synth_c{n_clusters}",
        seed=seed,
    )


def write_synth(
    out_dir: str | Path,
    n_neurons: int = DEFAULT_NEURONS,
    n_groups: int = DEFAULT_GROUPS,
    n_clusters: int = DEFAULT_CLUSTERS,
    noise: float = DEFAULT_NOISE,
    examples_per_group: int = DEFAULT_SAMPLES_PER_GROUP,
    seed: int = 0,
) -> Path:
    """Generate and save a synthetic activation manifest; returns its path."""
    acts = synth_activations(
        n_neurons, n_groups, n_clusters, noise, examples_per_group, seed
    )
    return save_activation_set(acts, out_dir, stem="synth")
