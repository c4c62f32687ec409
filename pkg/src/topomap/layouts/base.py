"""Layout container and the coordinate scaling shared by every engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ManifestError, TopomapError

METHODS = (
    "som",
    "graph",
    "pca",
    "tsne",
    "umap",
    "pso",
    "som_pso",
    "graph_pso",
    "pca_pso",
    "tsne_pso",
    "umap_pso",
    "random_baseline",
)


@dataclass
class Layout:
    """N unit-square coordinates with method provenance.

    After scaling, each dimension spans exactly [0, 1] unless it is
    degenerate, in which case it is constant 0.5.
    """

    coords: np.ndarray
    method: str
    seed: int = 0
    neuron_ids: list[int] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise TopomapError("layout coordinates must be an (N, 2) matrix")
        if not np.isfinite(self.coords).all():
            raise TopomapError("layout contains non-finite coordinates")
        if self.method not in METHODS:
            raise TopomapError(f"unknown layout method {self.method!r}")
        if not self.neuron_ids:
            self.neuron_ids = list(range(self.coords.shape[0]))
        if len(self.neuron_ids) != self.coords.shape[0]:
            raise TopomapError("neuron_ids length does not match coordinates")

    @property
    def n_neurons(self) -> int:
        return self.coords.shape[0]


def scale_coordinates(raw: np.ndarray) -> np.ndarray:
    """Affinely map each dimension onto [0, 1].

    A degenerate dimension (max == min) becomes constant 0.5 so the map
    stays centered.  Idempotent: scaling a scaled matrix is a no-op.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.isfinite(raw).all():
        raise TopomapError("cannot scale non-finite coordinates")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    out = np.empty_like(raw)
    for dim in range(raw.shape[1]):
        if span[dim] == 0.0:
            out[:, dim] = 0.5
        else:
            out[:, dim] = (raw[:, dim] - lo[dim]) / span[dim]
    return out


def save_layout(layout: Layout, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "method": layout.method,
        "seed": layout.seed,
        "params": layout.params,
        "neuron_ids": layout.neuron_ids,
        "coords": [[float(x), float(y)] for x, y in layout.coords],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path


def load_layout(path: str | Path) -> Layout:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"layout file not found: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    return Layout(
        coords=np.array(payload["coords"], dtype=np.float64),
        method=payload["method"],
        seed=int(payload.get("seed", 0)),
        neuron_ids=[int(i) for i in payload.get("neuron_ids", [])],
        params=payload.get("params", {}),
    )
