"""Profile computation: dense/conv paths, stacked inputs, distances, I/O."""

import json

import numpy as np
import pytest

from topomap.errors import ManifestError, TopomapError
from topomap.nap import (
    ActivationSet,
    GroupSpec,
    build_stacked_input,
    compute_nap,
    cosine_distance_matrix,
    groups_from_labels,
    load_activation_set,
    load_group_spec,
    load_nap,
    save_activation_set,
    save_nap,
)


def two_group_acts(values, labels=None, kind="dense", seed=0):
    values = np.asarray(values)
    if labels is None:
        half = values.shape[0] // 2
        labels = ["a"] * half + ["b"] * (values.shape[0] - half)
    return ActivationSet(
        layer_kind=kind, values=values, group_labels=np.asarray(labels), seed=seed
    )


def spec_for(acts, **kwargs):
    groups = groups_from_labels(acts.group_labels)
    kwargs.setdefault("samples_per_group", min(len(m) for _, m in groups))
    return GroupSpec(groups=groups, **kwargs)


# ---------------------------------------------------------------------------
# dense profiles


def test_dense_profile_two_groups_exact():
    # neuron 0 separates the groups, neuron 1 is constant
    values = np.array([[2.0, 5.0], [2.0, 5.0], [0.0, 5.0], [0.0, 5.0]])
    acts = two_group_acts(values)
    nap = compute_nap(acts, spec_for(acts))
    assert nap.group_ids == ["a", "b"]
    assert np.array_equal(nap.color_values, [[1.0, -1.0], [0.0, 0.0]])
    assert np.array_equal(nap.layout_features, nap.color_values)
    assert nap.neuron_ids == [0, 1]


def test_dense_rows_sum_to_zero(synth_nap):
    sums = synth_nap.color_values.sum(axis=1)
    assert np.abs(sums).max() <= 1e-6 * np.abs(synth_nap.color_values).max()


def test_zero_sum_with_unequal_group_sizes():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(10, 5))
    labels = ["a"] * 3 + ["b"] * 7
    acts = two_group_acts(values, labels)
    nap = compute_nap(acts, GroupSpec(groups=groups_from_labels(acts.group_labels), samples_per_group=3))
    assert np.abs(nap.color_values.sum(axis=1)).max() < 1e-12


def test_scale_covariance(synth_acts, synth_nap):
    k = 3.7
    scaled = ActivationSet(
        layer_kind="dense",
        values=synth_acts.values.astype(np.float64) * k,
        group_labels=synth_acts.group_labels,
        seed=synth_acts.seed,
    )
    nap_k = compute_nap(scaled, spec_for(scaled))
    ref = k * synth_nap.color_values
    assert np.abs(nap_k.color_values - ref).max() <= 1e-6 * np.abs(ref).max()


def test_subsampling_is_seeded(synth_acts):
    spec = spec_for(synth_acts, samples_per_group=50)
    a = compute_nap(synth_acts, spec)
    b = compute_nap(synth_acts, spec)
    assert np.array_equal(a.color_values, b.color_values)


def test_undersized_group_warns():
    values = np.arange(12.0).reshape(6, 2)
    acts = two_group_acts(values)
    with pytest.warns(UserWarning, match="fewer than the requested"):
        compute_nap(acts, GroupSpec(groups=groups_from_labels(acts.group_labels), samples_per_group=5))


# ---------------------------------------------------------------------------
# conv profiles


def test_conv_1x1_matches_dense_bit_exact(synth_acts):
    conv_values = synth_acts.values.reshape(synth_acts.n_examples, 1, 1, -1)
    conv_acts = ActivationSet(
        layer_kind="conv",
        values=conv_values,
        group_labels=synth_acts.group_labels,
        seed=synth_acts.seed,
    )
    dense = compute_nap(synth_acts, spec_for(synth_acts))
    conv = compute_nap(conv_acts, spec_for(conv_acts))
    assert np.array_equal(conv.layout_features, dense.layout_features)
    assert np.array_equal(conv.color_values, dense.color_values)
    assert conv.neuron_ids == dense.neuron_ids


def test_conv_layout_row_blocks_average_to_color():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(40, 3, 3, 4)).astype(np.float32)
    acts = two_group_acts(values, kind="conv")
    nap = compute_nap(acts, spec_for(acts))
    assert nap.layout_features.shape == (4, 2 * 3 * 3)
    assert nap.color_values.shape == (4, 2)
    blocks = nap.layout_features.reshape(4, 2, 9)
    assert np.allclose(blocks.mean(axis=2), nap.color_values, atol=1e-15)
    assert np.abs(nap.color_values.sum(axis=1)).max() < 1e-12


def test_conv_constant_and_sign_filters():
    # filter 0 never varies; filter 1 fires +1 on group a, -1 on group b
    values = np.zeros((8, 2, 2, 2))
    values[..., 0] = 7.0
    values[:4, :, :, 1] = 1.0
    values[4:, :, :, 1] = -1.0
    acts = two_group_acts(values, kind="conv")
    nap = compute_nap(acts, spec_for(acts))
    assert np.array_equal(nap.layout_features[0], np.zeros(8))
    assert np.array_equal(nap.color_values[0], np.zeros(2))
    assert np.array_equal(nap.layout_features[1], [1.0] * 4 + [-1.0] * 4)
    assert np.array_equal(nap.color_values[1], [1.0, -1.0])


def test_conv_wide_layer_shape():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(20, 6, 6, 128)).astype(np.float32)
    labels = np.repeat([f"g{i}" for i in range(10)], 2)
    acts = two_group_acts(values, labels, kind="conv")
    nap = compute_nap(acts, spec_for(acts))
    assert nap.layout_features.shape == (128, 360)
    assert nap.color_values.shape == (128, 10)
    assert nap.neuron_ids == list(range(128))


# ---------------------------------------------------------------------------
# stacked inputs


def test_stacked_balanced_shape_and_color(synth_acts, synth_nap):
    spec = spec_for(synth_acts, mode="balanced", samples_per_group=200)
    nap = compute_nap(synth_acts, spec)
    assert nap.layout_features.shape == (128, 2000)
    assert nap.mode == "balanced"
    assert nap.group_ids == synth_nap.group_ids
    assert np.array_equal(nap.color_values, synth_nap.color_values)


def constant_group_acts(sizes, seed):
    """Each group's examples carry its 1-based group number in neuron 0."""
    labels, col = [], []
    for g, size in enumerate(sizes):
        labels += [chr(ord("a") + g)] * size
        col += [float(g + 1)] * size
    values = np.column_stack([col, np.zeros(len(col))])
    return two_group_acts(values, labels, seed=seed)


def stacked_counts(sizes, total, seed):
    acts = constant_group_acts(sizes, seed)
    spec = GroupSpec(
        groups=groups_from_labels(acts.group_labels),
        mode="random",
        random_total=total,
        samples_per_group=min(sizes),
    )
    nap = build_stacked_input(acts, spec)
    row = nap.layout_features[0]
    return [int((row == g + 1).sum()) for g in range(len(sizes))], nap


def test_stacked_random_frozen_splits():
    assert stacked_counts([50, 50], 4, seed=7)[0] == [2, 2]
    assert stacked_counts([50, 50], 4, seed=0)[0] == [2, 2]
    # seed 4 empties one group entirely; the result is still valid
    counts, nap = stacked_counts([50, 50], 4, seed=4)
    assert counts == [4, 0]
    assert nap.layout_features.shape == (2, 4)
    assert nap.group_ids == ["a", "b"]


def test_stacked_random_capped_and_exhausted():
    # a group cannot contribute more examples than it has
    assert stacked_counts([2, 3], 4, seed=7)[0] == [2, 2]
    # total equal to the population forces the full split
    assert stacked_counts([2, 3], 5, seed=3)[0] == [2, 3]


def test_stacked_random_total_too_large():
    acts = constant_group_acts([2, 3], seed=0)
    spec = GroupSpec(
        groups=groups_from_labels(acts.group_labels),
        mode="random",
        random_total=6,
        samples_per_group=2,
    )
    with pytest.raises(TopomapError, match="requested total 6 exceeds available examples 5"):
        build_stacked_input(acts, spec)


def test_stacked_rejects_conv():
    values = np.zeros((4, 2, 2, 2))
    values[..., 1] = np.arange(4).reshape(4, 1, 1)
    acts = two_group_acts(values, kind="conv")
    with pytest.raises(TopomapError, match="dense-only"):
        compute_nap(acts, spec_for(acts, mode="balanced"))


# ---------------------------------------------------------------------------
# cosine distances


def test_cosine_distance_reference_angles():
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]])
    d = cosine_distance_matrix(rows)
    assert d[0, 1] == 1.0
    assert d[0, 2] == 2.0
    assert d[0, 3] == 0.0
    assert np.array_equal(d, d.T)
    assert np.array_equal(np.diag(d), np.zeros(4))
    assert d.min() >= 0.0 and d.max() <= 2.0


def test_cosine_distance_dead_neurons():
    rows = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    d = cosine_distance_matrix(rows)
    assert d[0, 1] == 1.0
    assert d[0, 2] == 0.0
    assert d[1, 2] == 1.0


def test_cosine_distance_scale_invariance():
    rows = np.random.default_rng(0).normal(size=(15, 6))
    assert np.allclose(
        cosine_distance_matrix(rows * 5.0), cosine_distance_matrix(rows), atol=1e-9
    )


def test_cosine_distance_needs_rows():
    with pytest.raises(TopomapError, match="at least 2 rows"):
        cosine_distance_matrix(np.ones((1, 4)))


# ---------------------------------------------------------------------------
# grouping and validation


def test_groups_from_labels_sorted():
    groups = groups_from_labels(np.array(["b", "a", "b"]))
    assert [gid for gid, _ in groups] == ["a", "b"]
    assert np.array_equal(groups[0][1], [1])
    assert np.array_equal(groups[1][1], [0, 2])


def test_group_spec_validation():
    groups = [("a", [0]), ("b", [1])]
    with pytest.raises(TopomapError, match="unknown mode"):
        GroupSpec(groups=groups, mode="weird")
    with pytest.raises(TopomapError, match="samples_per_group must be positive"):
        GroupSpec(groups=groups, samples_per_group=0)
    with pytest.raises(TopomapError, match="group ids must be unique"):
        GroupSpec(groups=[("a", [0]), ("a", [1])])


def test_group_spec_empty_group():
    with pytest.raises(TopomapError, match="group 'a' has no members"):
        GroupSpec(groups=[("a", []), ("b", [0])])


@pytest.mark.parametrize(
    "kwargs,msg",
    [
        (dict(layer_kind="foo", values=np.ones((2, 2)), group_labels=["a", "b"]), "unknown layer_kind"),
        (dict(layer_kind="dense", values=np.ones(4), group_labels=["a"] * 4), "must be 2-D"),
        (dict(layer_kind="dense", values=np.ones((3, 1)), group_labels=["a"] * 3), "at least 2 neurons"),
        (dict(layer_kind="conv", values=np.ones((2, 2, 2)), group_labels=["a", "b"]), "must be 4-D"),
        (dict(layer_kind="conv", values=np.ones((2, 2, 2, 1)), group_labels=["a", "b"]), "C >= 2"),
        (dict(layer_kind="dense", values=np.ones((0, 3)), group_labels=[]), "at least one example"),
        (dict(layer_kind="dense", values=np.ones((2, 2)), group_labels=["a"]), "label/example count mismatch"),
    ],
)
def test_activation_set_validation(kwargs, msg):
    with pytest.raises(TopomapError, match=msg):
        ActivationSet(**kwargs)


def test_activation_set_rejects_non_finite():
    with pytest.raises(TopomapError, match=r"non-finite activation value at index \(0, 1\)"):
        ActivationSet(
            layer_kind="dense",
            values=np.array([[0.0, np.nan], [1.0, 1.0]]),
            group_labels=["a", "b"],
        )


# ---------------------------------------------------------------------------
# manifest and array I/O


def test_activation_manifest_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    acts = ActivationSet(
        layer_kind="dense",
        values=rng.normal(size=(6, 3)).astype(np.float32),
        group_labels=np.array(["a", "a", "b", "b", "c", "c"]),
        layer_name="fc1",
        seed=11,
    )
    manifest = save_activation_set(acts, tmp_path, stem="fc1")
    assert manifest.name == "fc1_manifest.json"
    loaded = load_activation_set(manifest)
    assert loaded.layer_kind == "dense"
    assert loaded.layer_name == "fc1"
    assert loaded.seed == 11
    assert np.array_equal(loaded.values, acts.values)
    assert np.array_equal(loaded.group_labels.astype(str), acts.group_labels)


def test_conv_manifest_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    acts = ActivationSet(
        layer_kind="conv",
        values=rng.normal(size=(4, 2, 3, 5)).astype(np.float32),
        group_labels=np.array([0, 0, 1, 1]),
    )
    loaded = load_activation_set(save_activation_set(acts, tmp_path))
    assert loaded.values.shape == (4, 2, 3, 5)
    assert np.array_equal(loaded.values, acts.values)


def test_manifest_text_labels(tmp_path):
    values = np.ones((3, 2), dtype=np.float32)
    np.save(tmp_path / "acts.npy", values)
    (tmp_path / "labels.txt").write_text("x\ny\nx\n")
    manifest = {
        "layer_kind": "dense",
        "activations": "acts.npy",
        "labels": "labels.txt",
        "shape": [3, 2],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    loaded = load_activation_set(path)
    assert list(loaded.group_labels) == ["x", "y", "x"]


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError, match="manifest not found"):
        load_activation_set(tmp_path / "missing.json")

    acts = ActivationSet(
        layer_kind="dense",
        values=np.ones((2, 2), dtype=np.float32),
        group_labels=["a", "b"],
    )
    manifest_path = save_activation_set(acts, tmp_path)
    manifest = json.loads(manifest_path.read_text())

    broken = dict(manifest)
    del broken["shape"]
    (tmp_path / "broken.json").write_text(json.dumps(broken))
    with pytest.raises(ManifestError, match="manifest missing field 'shape'"):
        load_activation_set(tmp_path / "broken.json")

    broken = dict(manifest, activations="nope.npy")
    (tmp_path / "broken.json").write_text(json.dumps(broken))
    with pytest.raises(ManifestError, match="referenced file not found"):
        load_activation_set(tmp_path / "broken.json")

    broken = dict(manifest, shape=[3, 2])
    (tmp_path / "broken.json").write_text(json.dumps(broken))
    with pytest.raises(ManifestError, match="does not match manifest shape"):
        load_activation_set(tmp_path / "broken.json")

    broken = dict(manifest, labels="short.txt")
    (tmp_path / "short.txt").write_text("a\n")
    (tmp_path / "broken.json").write_text(json.dumps(broken))
    with pytest.raises(ManifestError, match="label/example count mismatch"):
        load_activation_set(tmp_path / "broken.json")


def test_nap_round_trip(tmp_path, synth_nap):
    path = save_nap(synth_nap, tmp_path, stem="n")
    loaded = load_nap(path)
    assert np.array_equal(loaded.layout_features, synth_nap.layout_features)
    assert np.array_equal(loaded.color_values, synth_nap.color_values)
    assert loaded.group_ids == synth_nap.group_ids
    assert loaded.neuron_ids == synth_nap.neuron_ids
    assert loaded.mode == synth_nap.mode
    assert loaded.seed == synth_nap.seed


def test_load_group_spec_members_and_labels(tmp_path):
    path = tmp_path / "groups.json"
    path.write_text(
        json.dumps(
            {
                "groups": [
                    {"id": "odd", "members": [1, 3]},
                    {"id": "even", "members": [0, 2]},
                ],
                "samples_per_group": 2,
                "mode": "naps",
            }
        )
    )
    spec = load_group_spec(path)
    assert spec.group_ids == ["odd", "even"]
    assert spec.samples_per_group == 2

    path.write_text(json.dumps({"groups": [{"id": "c", "label": "cat"}, {"id": "d", "label": "dog"}]}))
    labels = np.array(["cat", "dog", "cat"])
    spec = load_group_spec(path, labels=labels)
    assert np.array_equal(spec.groups[0][1], [0, 2])
    assert np.array_equal(spec.groups[1][1], [1])

    with pytest.raises(ManifestError, match="group spec not found"):
        load_group_spec(tmp_path / "missing.json")

    path.write_text(json.dumps({"groups": [{"id": "c"}]}))
    with pytest.raises(ManifestError, match="has no members"):
        load_group_spec(path)
