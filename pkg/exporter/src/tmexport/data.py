"""Datasets and label transforms.

Images are float32 in [0, 1], shaped (examples, 28, 28); labels are
int64 class indices. "auto" prefers MNIST via torchvision and falls
back to the sklearn digits set (8x8 scans upscaled to 28x28) when the
download is unavailable, so the pipeline stays runnable offline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DIGITS_TRAIN_FRACTION = 0.7


@dataclass
class Dataset:
    name: str
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(max(self.train_y.max(), self.test_y.max())) + 1


def _load_mnist(root: str) -> Dataset:
    from torchvision import datasets

    split = {}
    for train in (True, False):
        ds = datasets.MNIST(root, train=train, download=True)
        x = ds.data.numpy().astype(np.float32) / 255.0
        y = ds.targets.numpy().astype(np.int64)
        split[train] = (x, y)
    return Dataset("mnist", *split[True], *split[False])


def _upscale(images: np.ndarray) -> np.ndarray:
    # 8x8 -> 56x56 by pixel replication, then 2x2 mean pool -> 28x28.
    big = np.repeat(np.repeat(images, 7, axis=1), 7, axis=2)
    n = big.shape[0]
    return big.reshape(n, 28, 2, 28, 2).mean(axis=(2, 4))


def _load_digits(seed: int) -> Dataset:
    from sklearn.datasets import load_digits

    bunch = load_digits()
    x = _upscale(bunch.images.astype(np.float32) / 16.0)
    y = bunch.target.astype(np.int64)
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for label in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == label))
        cut = int(round(len(members) * DIGITS_TRAIN_FRACTION))
        train_idx.append(members[:cut])
        test_idx.append(members[cut:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return Dataset("digits", x[train_idx], y[train_idx], x[test_idx], y[test_idx])


def load_dataset(name: str = "auto", root: str = "data", seed: int = 0) -> Dataset:
    """Load a named dataset, or the first available one for "auto"."""
    if name == "mnist":
        return _load_mnist(root)
    if name == "digits":
        return _load_digits(seed)
    if name == "auto":
        try:
            return _load_mnist(root)
        except Exception as err:
            warnings.warn(f"MNIST unavailable ({err.__class__.__name__}); using digits fallback")
            return _load_digits(seed)
    raise ValueError(f"unknown dataset {name!r}")


def corrupt_labels(
    labels: np.ndarray, fraction: float, src: int, dst: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Relabel floor(fraction * |src class|) examples from src to dst.

    The selection is drawn without replacement from a generator seeded
    with `seed`; the sorted chosen indices are returned so callers can
    log exactly which annotations were changed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    if src == dst:
        raise ValueError("src and dst classes must differ")
    labels = np.asarray(labels)
    members = np.flatnonzero(labels == src)
    n_changed = int(np.floor(fraction * len(members)))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(members, size=n_changed, replace=False))
    out = labels.copy()
    out[chosen] = dst
    return out, chosen
