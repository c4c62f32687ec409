"""Neuron activation profiles.

Turns raw per-example layer activations into the per-neuron feature rows
that drive layouting and the per-neuron, per-group scalars that drive
coloring.  A profile row of a dense layer is the group-averaged activation
of one neuron, normalized by subtracting the unweighted mean of the group
means, so each row sums to zero across groups.  Convolutional layers are
profiled per filter: each feature map is averaged per group, normalized
the same way, flattened and concatenated over groups.

Alternative "stacked" inputs (raw activations of a balanced or randomly
imbalanced subsample, no averaging) are supported for dense layers; they
feed the layout engines while coloring stays profile-based.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError, TopomapError

DEFAULT_SAMPLES_PER_GROUP = 200
DEFAULT_RANDOM_TOTAL = 1000

MODES = ("naps", "balanced", "random")
LAYER_KINDS = ("dense", "conv")


@dataclass
class ActivationSet:
    """Raw activations of one layer plus a group label per example.

    values: (E, N) for dense layers, (E, h, w, C) for conv layers.
    """

    layer_kind: str
    values: np.ndarray
    group_labels: np.ndarray
    layer_name: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.layer_kind not in LAYER_KINDS:
            raise TopomapError(f"unknown layer_kind {self.layer_kind!r}")
        self.values = np.asarray(self.values)
        self.group_labels = np.asarray(self.group_labels)
        if self.layer_kind == "dense":
            if self.values.ndim != 2:
                raise TopomapError("dense activations must be 2-D (examples x neurons)")
            if self.values.shape[1] < 2:
                raise TopomapError("dense layer needs at least 2 neurons")
        else:
            if self.values.ndim != 4:
                raise TopomapError("conv activations must be 4-D (examples x h x w x channels)")
            e, h, w, c = self.values.shape
            if c < 2 or h < 1 or w < 1:
                raise TopomapError("conv layer needs C >= 2 and h, w >= 1")
        if self.values.shape[0] < 1:
            raise TopomapError("need at least one example")
        if len(self.group_labels) != self.values.shape[0]:
            raise TopomapError("label/example count mismatch")
        bad = ~np.isfinite(self.values)
        if bad.any():
            idx = tuple(int(k) for k in np.argwhere(bad)[0])
            raise TopomapError(f"non-finite activation value at index {idx}")

    @property
    def n_examples(self) -> int:
        return self.values.shape[0]

    @property
    def n_units(self) -> int:
        """Neuron count for dense layers, filter count for conv layers."""
        return self.values.shape[-1]


@dataclass
class GroupSpec:
    """Ordered example groupings plus the subsampling protocol.

    groups maps group ids to example indices; groups may overlap.  mode
    selects the layout input: "naps" (averaged + normalized profiles),
    "balanced" (stacked raw activations, fixed count per group) or
    "random" (stacked raw activations, multinomially imbalanced counts
    totalling random_total).  The grouping is always retained for coloring.
    """

    groups: list[tuple[str, np.ndarray]]
    samples_per_group: int = DEFAULT_SAMPLES_PER_GROUP
    mode: str = "naps"
    random_total: int = DEFAULT_RANDOM_TOTAL

    def __post_init__(self):
        if self.mode not in MODES:
            raise TopomapError(f"unknown mode {self.mode!r}")
        if self.samples_per_group < 1:
            raise TopomapError("samples_per_group must be positive")
        ids = [gid for gid, _ in self.groups]
        if len(set(ids)) != len(ids):
            raise TopomapError("group ids must be unique")
        self.groups = [(str(gid), np.asarray(members, dtype=np.intp)) for gid, members in self.groups]
        for gid, members in self.groups:
            if len(members) == 0:
                raise TopomapError(f"group {gid!r} has no members")

    @property
    def group_ids(self) -> list[str]:
        return [gid for gid, _ in self.groups]


@dataclass
class NapMatrix:
    """Per-neuron feature rows plus per-neuron, per-group color scalars.

    layout_features: (N, D) rows consumed by the layout engines
    (D = G for dense profiles, D = w*h*G for conv, D = E' for stacked
    inputs).  color_values: (N, G) scalars consumed by the renderer.
    """

    layout_features: np.ndarray
    color_values: np.ndarray
    group_ids: list[str]
    neuron_ids: list[int]
    mode: str = "naps"
    seed: int = 0

    def __post_init__(self):
        self.layout_features = np.asarray(self.layout_features, dtype=np.float64)
        self.color_values = np.asarray(self.color_values, dtype=np.float64)
        n = self.layout_features.shape[0]
        if self.color_values.shape != (n, len(self.group_ids)):
            raise TopomapError("color_values shape does not match neuron/group counts")
        if len(self.neuron_ids) != n:
            raise TopomapError("neuron_ids length does not match layout_features rows")
        if not np.isfinite(self.layout_features).all() or not np.isfinite(self.color_values).all():
            raise TopomapError("non-finite profile values")

    @property
    def n_neurons(self) -> int:
        return self.layout_features.shape[0]

    @property
    def n_groups(self) -> int:
        return len(self.group_ids)


def groups_from_labels(labels: np.ndarray) -> list[tuple[str, np.ndarray]]:
    """One group per distinct label, in sorted label order."""
    labels = np.asarray(labels)
    return [(str(v), np.flatnonzero(labels == v)) for v in np.unique(labels)]


# ---------------------------------------------------------------------------
# manifest + array files


def _load_labels(path: Path, n_examples: int) -> np.ndarray:
    if path.suffix == ".npy":
        labels = np.load(path)
    else:
        with open(path) as fh:
            labels = np.array([line.strip() for line in fh if line.strip() != ""])
    labels = labels.reshape(-1)
    if len(labels) != n_examples:
        raise ManifestError(
            f"label/example count mismatch: {len(labels)} labels for {n_examples} examples"
        )
    return labels


def load_activation_set(manifest_path: str | Path) -> ActivationSet:
    """Load an activation dump described by a JSON manifest.

    The manifest carries layer_name, layer_kind, relative paths to the
    activation array (NPY, float32 C-order) and the labels (NPY int array
    or newline-delimited text), the expected array shape and optionally
    the subsampling seed.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ManifestError(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    for key in ("layer_kind", "activations", "labels", "shape"):
        if key not in manifest:
            raise ManifestError(f"manifest missing field {key!r}")
    base = manifest_path.parent
    acts_path = base / manifest["activations"]
    labels_path = base / manifest["labels"]
    for p in (acts_path, labels_path):
        if not p.exists():
            raise ManifestError(f"referenced file not found: {p}")
    values = np.load(acts_path)
    declared = tuple(manifest["shape"])
    if values.shape != declared:
        raise ManifestError(
            f"activation shape {values.shape} does not match manifest shape {declared}"
        )
    labels = _load_labels(labels_path, values.shape[0])
    try:
        return ActivationSet(
            layer_kind=manifest["layer_kind"],
            values=values,
            group_labels=labels,
            layer_name=manifest.get("layer_name", ""),
            seed=int(manifest.get("seed", 0)),
        )
    except TopomapError as err:
        raise ManifestError(str(err)) from err


def save_activation_set(
    acts: ActivationSet, out_dir: str | Path, stem: str = "activations"
) -> Path:
    """Write an activation dump as manifest JSON + NPY payloads.

    Arrays are stored float32 so round-trips through the manifest are
    exact for exporter output; the manifest references files relative to
    its own directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    acts_name = f"{stem}.npy"
    labels_name = f"{stem}_labels.npy"
    np.save(out_dir / acts_name, np.asarray(acts.values, dtype=np.float32))
    np.save(out_dir / labels_name, acts.group_labels)
    manifest = {
        "layer_name": acts.layer_name,
        "layer_kind": acts.layer_kind,
        "activations": acts_name,
        "labels": labels_name,
        "shape": list(acts.values.shape),
        "seed": acts.seed,
    }
    path = out_dir / f"{stem}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def save_nap(nap: NapMatrix, out_dir: str | Path, stem: str = "nap") -> Path:
    """Serialize a NapMatrix as a JSON header plus NPY payloads."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feat_name = f"{stem}_layout_features.npy"
    color_name = f"{stem}_color_values.npy"
    np.save(out_dir / feat_name, nap.layout_features)
    np.save(out_dir / color_name, nap.color_values)
    header = {
        "group_ids": nap.group_ids,
        "neuron_ids": nap.neuron_ids,
        "mode": nap.mode,
        "seed": nap.seed,
        "layout_features": feat_name,
        "color_values": color_name,
    }
    path = out_dir / f"{stem}.json"
    with open(path, "w") as fh:
        json.dump(header, fh, indent=2)
    return path


def load_nap(path: str | Path) -> NapMatrix:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"nap file not found: {path}")
    with open(path) as fh:
        header = json.load(fh)
    base = path.parent
    return NapMatrix(
        layout_features=np.load(base / header["layout_features"]),
        color_values=np.load(base / header["color_values"]),
        group_ids=[str(g) for g in header["group_ids"]],
        neuron_ids=[int(i) for i in header["neuron_ids"]],
        mode=header.get("mode", "naps"),
        seed=int(header.get("seed", 0)),
    )


def load_group_spec(path: str | Path, labels: np.ndarray | None = None) -> GroupSpec:
    """Read a GroupSpec JSON file.

    Groups are given either as explicit member index lists or, when a
    "label" key is used and labels are provided, as all examples carrying
    that label.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"group spec not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    groups = []
    for entry in raw["groups"]:
        if "members" in entry:
            members = np.asarray(entry["members"], dtype=np.intp)
        elif "label" in entry and labels is not None:
            members = np.flatnonzero(np.asarray(labels).astype(str) == str(entry["label"]))
        else:
            raise ManifestError(f"group entry {entry.get('id')!r} has no members")
        groups.append((str(entry["id"]), members))
    return GroupSpec(
        groups=groups,
        samples_per_group=int(raw.get("samples_per_group", DEFAULT_SAMPLES_PER_GROUP)),
        mode=raw.get("mode", "naps"),
        random_total=int(raw.get("random_total", DEFAULT_RANDOM_TOTAL)),
    )


# ---------------------------------------------------------------------------
# profile computation


def _draw_group(rng: np.random.Generator, gid: str, members: np.ndarray, k: int) -> np.ndarray:
    """Sample min(k, |group|) member indices without replacement.

    Undersized groups are used whole (with a warning) and consume no
    randomness.  Drawn indices are sorted so the averaged value does not
    depend on draw order.
    """
    if len(members) <= k:
        if len(members) < k:
            warnings.warn(
                f"group {gid!r} has {len(members)} examples, fewer than the "
                f"requested {k}; using all of them",
                stacklevel=3,
            )
        return np.sort(members)
    return np.sort(rng.choice(members, size=k, replace=False))


def _sampled_group_means(
    values2d: np.ndarray, spec: GroupSpec, rng: np.random.Generator
) -> np.ndarray:
    """(G, F) matrix of per-group feature means over seeded subsamples."""
    means = np.empty((len(spec.groups), values2d.shape[1]), dtype=np.float64)
    for gi, (gid, members) in enumerate(spec.groups):
        drawn = _draw_group(rng, gid, members, spec.samples_per_group)
        if len(drawn) == 0:
            raise TopomapError(f"group {gid!r} is empty after sampling")
        means[gi] = values2d[drawn].astype(np.float64, copy=False).mean(axis=0)
    return means


def compute_nap_dense(acts: ActivationSet, spec: GroupSpec) -> NapMatrix:
    """Profile a dense layer: group means minus the mean of group means.

    The normalizing mean is the unweighted mean of the per-group means,
    which makes every profile row sum to zero across groups regardless of
    group sizes.  Layout features and color values coincide.
    """
    if acts.layer_kind != "dense":
        raise TopomapError("compute_nap_dense expects a dense layer")
    if spec.mode != "naps":
        raise TopomapError("compute_nap_dense expects mode='naps'")
    rng = np.random.default_rng(acts.seed)
    means = _sampled_group_means(acts.values, spec, rng)
    normalized = means - means.mean(axis=0, keepdims=True)
    color = normalized.T.copy()
    return NapMatrix(
        layout_features=color,
        color_values=color,
        group_ids=spec.group_ids,
        neuron_ids=list(range(acts.n_units)),
        mode=spec.mode,
        seed=acts.seed,
    )


def compute_nap_conv(acts: ActivationSet, spec: GroupSpec) -> NapMatrix:
    """Profile a conv layer per filter.

    Each feature map is averaged per group and normalized across groups
    exactly like the dense path (the conv layer is reduced to an
    (E, h*w*C) matrix, so a 1x1 conv layer profiles bit-identically to a
    dense layer).  The normalized w x h maps are flattened and
    concatenated over groups into the layout row; the color value per
    group is the mean of that group's normalized map.
    """
    if acts.layer_kind != "conv":
        raise TopomapError("compute_nap_conv expects a conv layer")
    e, h, w, c = acts.values.shape
    rng = np.random.default_rng(acts.seed)
    means = _sampled_group_means(acts.values.reshape(e, h * w * c), spec, rng)
    normalized = means - means.mean(axis=0, keepdims=True)
    g = len(spec.groups)
    maps = normalized.reshape(g, h, w, c)
    # layout row of filter c: [map(g=0) flattened, map(g=1) flattened, ...]
    features = maps.transpose(3, 0, 1, 2).reshape(c, g * h * w)
    color = maps.mean(axis=(1, 2)).T.copy()
    return NapMatrix(
        layout_features=features,
        color_values=color,
        group_ids=spec.group_ids,
        neuron_ids=list(range(c)),
        mode=spec.mode,
        seed=acts.seed,
    )


def compute_nap(acts: ActivationSet, spec: GroupSpec) -> NapMatrix:
    """Dispatch to the dense or conv profile (or stacked input) path."""
    if spec.mode in ("balanced", "random"):
        return build_stacked_input(acts, spec)
    if acts.layer_kind == "dense":
        return compute_nap_dense(acts, spec)
    return compute_nap_conv(acts, spec)


def _multinomial_counts(
    rng: np.random.Generator, total: int, sizes: np.ndarray
) -> np.ndarray:
    """Uniform multinomial split of `total` over groups, capped at group sizes.

    Overflow beyond a group's size is redistributed over the remaining
    capacity until the split is feasible.
    """
    if total > int(sizes.sum()):
        raise TopomapError(
            f"requested total {total} exceeds available examples {int(sizes.sum())}"
        )
    g = len(sizes)
    counts = rng.multinomial(total, np.full(g, 1.0 / g))
    while True:
        overflow = np.maximum(counts - sizes, 0)
        if not overflow.any():
            return counts
        counts = np.minimum(counts, sizes)
        capacity = sizes - counts
        probs = capacity / capacity.sum()
        counts = counts + rng.multinomial(int(overflow.sum()), probs)


def build_stacked_input(acts: ActivationSet, spec: GroupSpec) -> NapMatrix:
    """Stack raw activations of a subsample instead of averaging.

    mode="balanced" draws samples_per_group examples per group;
    mode="random" splits random_total examples over the groups with a
    uniform multinomial, simulating class imbalance.  Layout features are
    the (N, E') transposed raw activations of the selection; color values
    are still the averaged + normalized profiles so rendering is
    unchanged.  Conv layers are rejected: stacking feature maps would
    multiply the feature dimension by E' * w * h.
    """
    if acts.layer_kind != "dense":
        raise TopomapError("stacked inputs (balanced/random) are dense-only")
    if spec.mode not in ("balanced", "random"):
        raise TopomapError("build_stacked_input expects mode 'balanced' or 'random'")
    rng = np.random.default_rng(acts.seed)
    selected: list[np.ndarray] = []
    if spec.mode == "balanced":
        for gid, members in spec.groups:
            selected.append(_draw_group(rng, gid, members, spec.samples_per_group))
    else:
        sizes = np.array([len(m) for _, m in spec.groups])
        counts = _multinomial_counts(rng, spec.random_total, sizes)
        for (gid, members), k in zip(spec.groups, counts):
            if k == 0:
                continue
            selected.append(_draw_group(rng, gid, members, int(k)))
    columns = np.concatenate(selected) if selected else np.empty(0, dtype=np.intp)
    if len(columns) == 0:
        raise TopomapError("stacked selection is empty")
    features = acts.values[columns].astype(np.float64, copy=False).T.copy()

    color_spec = GroupSpec(
        groups=list(spec.groups),
        samples_per_group=spec.samples_per_group,
        mode="naps",
    )
    color = compute_nap_dense(acts, color_spec).color_values
    return NapMatrix(
        layout_features=features,
        color_values=color,
        group_ids=spec.group_ids,
        neuron_ids=list(range(acts.n_units)),
        mode=spec.mode,
        seed=acts.seed,
    )


def cosine_distance_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances 1 - cos_sim between feature rows, in [0, 2].

    Zero-norm rows (dead neurons) are treated as orthogonal to every
    nonzero row (distance 1) and identical to each other (distance 0), so
    they never produce NaN.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TopomapError("need a 2-D feature matrix with at least 2 rows")
    norms = np.linalg.norm(x, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    sim = (x @ x.T) / np.outer(safe, safe)
    d = 1.0 - sim
    np.clip(d, 0.0, 2.0, out=d)
    d[zero, :] = 1.0
    d[:, zero] = 1.0
    d[np.ix_(zero, zero)] = 0.0
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d
