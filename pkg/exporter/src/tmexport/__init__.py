"""Activation exporter: small torch models -> topomap manifests.

Owns everything framework-specific so the map engine stays
framework-free; the manifest/NPY/GroupSpec files are the only contract
between the two packages.
"""

__version__ = "0.1.0"

from .data import Dataset, corrupt_labels, load_dataset
from .export import ExportJob, export_activations, export_groups, write_groups
from .models import build_model, predict, train_model

__all__ = [
    "Dataset",
    "ExportJob",
    "build_model",
    "corrupt_labels",
    "export_activations",
    "export_groups",
    "load_dataset",
    "predict",
    "train_model",
    "write_groups",
]
