"""Shared fixtures: synthetic activation sets reused read-only by tests."""

import numpy as np
import pytest

from topomap.nap import GroupSpec, compute_nap, groups_from_labels
from topomap.synth import synth_activations


def nap_from_acts(acts):
    return compute_nap(acts, GroupSpec(groups=groups_from_labels(acts.group_labels)))


@pytest.fixture(scope="session")
def synth_acts():
    """Default synthetic layer: 128 neurons, 10 groups, 4 clusters, noise 0.1."""
    return synth_activations(seed=0)


@pytest.fixture(scope="session")
def synth_nap(synth_acts):
    return nap_from_acts(synth_acts)


@pytest.fixture(scope="session")
def two_cluster_acts():
    """Noise-free layer whose neurons split into two identical-profile clusters."""
    return synth_activations(n_neurons=40, n_groups=8, n_clusters=2, noise=0.0, seed=0)


@pytest.fixture(scope="session")
def two_cluster_nap(two_cluster_acts):
    return nap_from_acts(two_cluster_acts)


def cluster_distance_means(coords, labels):
    """Mean intra-cluster and inter-cluster pairwise distance."""
    coords = np.asarray(coords, dtype=np.float64)
    labels = np.asarray(labels)
    d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    same = labels[:, None] == labels[None, :]
    iu = np.triu_indices(len(coords), 1)
    return float(d[iu][same[iu]].mean()), float(d[iu][~same[iu]].mean())
