"""Export jobs: train, capture, and write map-engine input files.

A job produces, under its output directory:

    <stem>.npy                     activations, float32
    <stem>_labels.npy              annotation labels of the exported split
    <stem>_predictions.npy         model predictions on that split
    <stem>_manifest.json           manifest consumed by the map engine
    <stem>_groups_<mode>.json      one GroupSpec per grouping mode
    <stem>_log.json                training curve, accuracy, corruption log

Labels and predictions are both written so class, correct/wrong and
confusion groupings can all be formed downstream without the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import corrupt_labels, load_dataset
from .models import build_model, capture_activations, predict, train_model

GROUP_MODES = ("class", "correct_wrong", "confusion")


@dataclass
class ExportJob:
    model: str = "mlp"
    layer: str = "fc1"
    dataset: str = "auto"
    data_root: str = "data"
    split: str = "test"
    epochs: int = 20
    corrupt_fraction: float = 0.0
    corrupt_src: int = 0
    corrupt_dst: int = 1
    corrupt_split: str = "train"
    samples_per_group: int | None = None
    seed: int = 0
    out_dir: str | Path = "export"
    stem: str = ""
    group_modes: tuple[str, ...] = field(default=GROUP_MODES)

    def __post_init__(self):
        if not 0.0 <= self.corrupt_fraction <= 1.0:
            raise ValueError("corrupt_fraction must be in [0, 1]")
        if self.split not in ("train", "test") or self.corrupt_split not in ("train", "test"):
            raise ValueError("split must be 'train' or 'test'")
        unknown = set(self.group_modes) - set(GROUP_MODES)
        if unknown:
            raise ValueError(f"unknown group modes {sorted(unknown)}")
        if not self.stem:
            self.stem = f"{self.model}_{self.layer}"


def export_groups(
    predictions: np.ndarray, labels: np.ndarray, mode: str
) -> list[tuple[str, list[int]]]:
    """Group example indices by annotation/prediction; empty groups omitted.

    class: one group per annotated label. correct_wrong: per label, the
    correctly and the wrongly predicted examples. confusion: one group
    per observed (label, prediction) pair, id "label->prediction".
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(
            f"prediction/label lengths differ: {predictions.shape} vs {labels.shape}"
        )
    if mode not in GROUP_MODES:
        raise ValueError(f"unknown group mode {mode!r}")
    groups: list[tuple[str, list[int]]] = []
    classes = np.unique(labels)
    if mode == "class":
        for k in classes:
            groups.append((str(k), np.flatnonzero(labels == k).tolist()))
    elif mode == "correct_wrong":
        for k in classes:
            mine = labels == k
            correct = np.flatnonzero(mine & (predictions == k))
            wrong = np.flatnonzero(mine & (predictions != k))
            if len(correct):
                groups.append((f"{k}_correct", correct.tolist()))
            if len(wrong):
                groups.append((f"{k}_wrong", wrong.tolist()))
    else:
        for t in classes:
            for p in np.unique(predictions):
                members = np.flatnonzero((labels == t) & (predictions == p))
                if len(members):
                    groups.append((f"{t}->{p}", members.tolist()))
    return groups


def write_groups(
    groups: list[tuple[str, list[int]]],
    path: str | Path,
    samples_per_group: int | None = None,
) -> Path:
    """Write a GroupSpec JSON; default sample count is the smallest group."""
    if not groups:
        raise ValueError("no groups to write")
    if samples_per_group is None:
        samples_per_group = min(len(m) for _, m in groups)
    spec = {
        "samples_per_group": int(samples_per_group),
        "mode": "naps",
        "groups": [{"id": gid, "members": members} for gid, members in groups],
    }
    path = Path(path)
    path.write_text(json.dumps(spec, indent=2))
    return path


def export_activations(job: ExportJob) -> Path:
    """Run one job end to end; returns the manifest path."""
    data = load_dataset(job.dataset, root=job.data_root, seed=job.seed)
    labels = {"train": data.train_y, "test": data.test_y}
    images = {"train": data.train_x, "test": data.test_x}

    corruption = None
    if job.corrupt_fraction > 0.0:
        corrupted, changed = corrupt_labels(
            labels[job.corrupt_split],
            job.corrupt_fraction,
            job.corrupt_src,
            job.corrupt_dst,
            seed=job.seed,
        )
        labels = dict(labels, **{job.corrupt_split: corrupted})
        corruption = {
            "fraction": job.corrupt_fraction,
            "src": job.corrupt_src,
            "dst": job.corrupt_dst,
            "split": job.corrupt_split,
            "n_changed": len(changed),
            "indices": changed.tolist(),
        }

    model = build_model(job.model, n_classes=data.n_classes, seed=job.seed)
    if job.layer not in model.export_layers:
        raise ValueError(
            f"model {job.model!r} has no export layer {job.layer!r}; "
            f"expected one of {sorted(model.export_layers)}"
        )
    training = train_model(
        model, images["train"], labels["train"], epochs=job.epochs, seed=job.seed
    )

    acts = capture_activations(model, job.layer, images[job.split])
    preds = predict(model, images[job.split])
    split_labels = labels[job.split]
    accuracy = float((preds == split_labels).mean())

    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = job.stem
    np.save(out / f"{stem}.npy", acts)
    np.save(out / f"{stem}_labels.npy", split_labels.astype(np.int64))
    np.save(out / f"{stem}_predictions.npy", preds)

    manifest = {
        "layer_name": job.layer,
        "layer_kind": "conv" if acts.ndim == 4 else "dense",
        "activations": f"{stem}.npy",
        "labels": f"{stem}_labels.npy",
        "shape": list(acts.shape),
        "seed": job.seed,
        "model": job.model,
        "dataset": data.name,
        "split": job.split,
        "predictions": f"{stem}_predictions.npy",
        "training": training,
        "corruption": corruption,
    }
    manifest_path = out / f"{stem}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))

    for mode in job.group_modes:
        groups = export_groups(preds, split_labels, mode)
        write_groups(groups, out / f"{stem}_groups_{mode}.json", job.samples_per_group)

    log = {
        "accuracy": accuracy,
        "dataset": data.name,
        "examples": int(len(split_labels)),
        "training": training,
        "corruption": corruption,
    }
    (out / f"{stem}_log.json").write_text(json.dumps(log, indent=2))
    return manifest_path
