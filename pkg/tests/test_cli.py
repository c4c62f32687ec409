"""End-to-end CLI behavior: exit codes, artifacts, reproducibility."""

import csv
import json

import numpy as np
import pytest

from topomap.cli import main
from topomap.nap import ActivationSet, save_activation_set


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth_args(out, seed=0):
    return [
        "synth",
        "--neurons", "24",
        "--groups", "4",
        "--clusters", "2",
        "--noise", "0.1",
        "--examples", "10",
        "--seed", str(seed),
        "-o", str(out),
    ]


@pytest.fixture()
def workspace(tmp_path, capsys):
    """synth -> nap -> layout artifacts for the downstream commands."""
    code, out, _ = run(capsys, *synth_args(tmp_path))
    assert code == 0
    manifest = out.strip()
    code, out, _ = run(
        capsys, "nap", "--manifest", manifest, "--samples", "10", "-o", str(tmp_path)
    )
    assert code == 0
    nap_path = out.strip()
    code, out, _ = run(
        capsys, "layout", "--nap", nap_path, "--method", "pca", "-o", str(tmp_path)
    )
    assert code == 0
    return tmp_path, manifest, nap_path, out.strip()


def test_full_command_chain(workspace, capsys):
    tmp_path, manifest, nap_path, layout_path = workspace
    assert layout_path.endswith("layout_pca.json")
    code, out, _ = run(
        capsys,
        "render",
        "--nap", nap_path,
        "--layout", layout_path,
        "--resolution", "40",
        "-o", str(tmp_path),
    )
    assert code == 0
    assert out.strip().endswith("map_strip.png")
    code, out, _ = run(
        capsys,
        "eval",
        "--nap", nap_path,
        "--layout", layout_path,
        "-o", str(tmp_path),
    )
    assert code == 0
    report = json.loads((tmp_path / "quality_blur.json").read_text())
    assert report["metric"] == "blur"
    assert len(report["per_param_mse"]) == 10
    for command in ("synth", "nap", "layout", "render", "eval"):
        assert (tmp_path / f"provenance_{command}.json").exists()


def test_provenance_contents(workspace):
    tmp_path, _, _, _ = workspace
    record = json.loads((tmp_path / "provenance_layout.json").read_text())
    assert record["command"] == "layout"
    assert record["outputs"] == ["layout_pca.json"]
    assert set(record["versions"]) == {"topomap", "numpy", "scipy", "numba", "pillow"}
    assert record["parameters"]["method"] == "pca"
    # no wall-clock state: reruns must produce identical bytes
    assert "time" not in json.dumps(record).lower()


def test_reruns_are_byte_identical(tmp_path, capsys):
    outputs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        code, text, _ = run(capsys, *synth_args(out))
        assert code == 0
        manifest = text.strip()
        code, text, _ = run(capsys, "nap", "--manifest", manifest, "--samples", "10", "-o", str(out))
        assert code == 0
        nap_path = text.strip()
        code, text, _ = run(capsys, "layout", "--nap", nap_path, "--method", "som_pso", "-o", str(out))
        assert code == 0
        code, text, _ = run(
            capsys, "render", "--nap", nap_path, "--layout", text.strip(),
            "--resolution", "40", "--svg", "-o", str(out),
        )
        assert code == 0
        outputs.append(out)
    a, b = outputs
    for name in (
        "synth_manifest.json",
        "synth.npy",
        "synth_labels.npy",
        "nap.json",
        "nap_layout_features.npy",
        "nap_color_values.npy",
        "layout_som_pso.json",
        "map_strip.png",
        "map_strip.svg",
        "provenance_synth.json",
    ):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    # provenance records the input paths; identical up to the run directory
    for name in ("provenance_nap.json", "provenance_layout.json", "provenance_render.json"):
        norm_a = (a / name).read_text().replace(str(a), "OUT")
        norm_b = (b / name).read_text().replace(str(b), "OUT")
        assert norm_a == norm_b, name


def test_grid_descriptor_selects_groups(workspace, capsys):
    tmp_path, _, nap_path, layout_path = workspace
    descriptor = tmp_path / "grid.json"
    descriptor.write_text(
        json.dumps({"mode": "strip", "rows": [{"group_id": "1"}, {"group_id": "3"}]})
    )
    code, out, _ = run(
        capsys,
        "render",
        "--nap", nap_path,
        "--layout", layout_path,
        "--grid", str(descriptor),
        "--resolution", "30",
        "--name", "pair.png",
        "-o", str(tmp_path),
    )
    assert code == 0
    from PIL import Image

    with Image.open(tmp_path / "pair.png") as image:
        assert image.size == (2 * 34 + 4, 30 + 18 + 4)
    record = json.loads((tmp_path / "provenance_render.json").read_text())
    assert record["parameters"]["groups"] == ["1", "3"]


def test_trials_csv_format(workspace, capsys):
    tmp_path, _, nap_path, _ = workspace
    code, _, _ = run(
        capsys,
        "eval",
        "--nap", nap_path,
        "--method", "pca_pso",
        "--trials", "2",
        "-o", str(tmp_path),
    )
    assert code == 0
    with open(tmp_path / "quality_trials.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trial", "method", "metric", "auc"]
    assert len(rows) == 5
    assert [r[2] for r in rows[1:]] == ["blur", "blur", "resize", "resize"]
    assert all(r[1] == "pca_pso" for r in rows[1:])
    # AUC cells are repr()ed floats: exact round-trip
    blur_report = json.loads((tmp_path / "quality_blur.json").read_text())
    assert float(rows[1][3]) == blur_report["trials"][0]


def test_eq1_literal_recorded(workspace, capsys):
    tmp_path, _, nap_path, _ = workspace
    code, out, _ = run(
        capsys,
        "layout",
        "--nap", nap_path,
        "--method", "pso",
        "--steps", "50",
        "--eq1-literal",
        "-o", str(tmp_path),
    )
    assert code == 0
    layout = json.loads((tmp_path / "layout_pso.json").read_text())
    assert layout["params"]["eq1_literal"] is True
    assert layout["params"]["steps"] == 50
    record = json.loads((tmp_path / "provenance_layout.json").read_text())
    assert record["parameters"]["pso"]["eq1_literal"] is True


def test_pipeline_config_with_flag_override(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "synth": {"n_neurons": 24, "n_groups": 4, "n_clusters": 2, "examples_per_group": 10},
                "nap": {"samples_per_group": 10},
                "layout": {"method": "pca"},
                "render": {"resolution": 40},
            }
        )
    )
    out = tmp_path / "run"
    code, text, _ = run(
        capsys, "pipeline", "--config", str(config), "--method", "graph", "-o", str(out)
    )
    assert code == 0
    assert text.strip() == str(out)
    assert (out / "layout_graph.json").exists()
    assert (out / "map_strip.png").exists()
    assert (out / "quality_blur.json").exists()
    assert (out / "quality_resize.json").exists()
    record = json.loads((out / "provenance_pipeline.json").read_text())
    assert record["parameters"]["layout"]["method"] == "graph"
    assert record["parameters"]["render"]["resolution"] == 40


def test_pipeline_stage_error_is_prefixed(tmp_path, capsys):
    acts = ActivationSet(
        layer_kind="conv",
        values=np.random.default_rng(0).normal(size=(8, 2, 2, 4)).astype(np.float32),
        group_labels=np.repeat(["a", "b"], 4),
    )
    manifest = save_activation_set(acts, tmp_path)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"nap": {"mode": "balanced", "samples_per_group": 4}}))
    code, _, err = run(
        capsys,
        "pipeline",
        "--config", str(config),
        "--manifest", str(manifest),
        "-o", str(tmp_path / "run"),
    )
    assert code == 1
    assert err.startswith("error: stage 'nap' failed:")
    assert "dense-only" in err


def test_domain_errors_exit_one(workspace, capsys):
    tmp_path, manifest, nap_path, _ = workspace
    code, _, err = run(capsys, "nap", "--manifest", str(tmp_path / "nope.json"), "-o", str(tmp_path))
    assert code == 1
    assert err.startswith("error: manifest not found")
    code, _, err = run(capsys, "eval", "--nap", nap_path, "-o", str(tmp_path))
    assert code == 1
    assert "eval needs --layout, or --method with --trials" in err
    code, _, err = run(capsys, "eval", "--nap", nap_path, "--trials", "2", "-o", str(tmp_path))
    assert code == 1
    assert "--trials needs --method" in err
    code, _, err = run(
        capsys, "eval", "--nap", nap_path, "--method", "pca", "--trials", "2",
        "--resample", "-o", str(tmp_path),
    )
    assert code == 1
    assert "--resample needs --manifest" in err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["layout", "--nap", "x.json", "--method", "bogus"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["nap"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
