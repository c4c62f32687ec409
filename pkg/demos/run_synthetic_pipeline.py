"""End-to-end walkthrough on synthetic activations.

Generates a synthetic activation set with planted neuron clusters,
computes the normalized activation profiles, lays the neurons out with
the umap_pso hybrid, renders a strip of per-group maps and reports the
blur/resize robustness of the result.

Run:
    python demos/run_synthetic_pipeline.py --out demos/out/pipeline
"""

from __future__ import annotations

import argparse
import warnings
from pathlib import Path

from topomap import (
    GroupSpec,
    compute_layout,
    compute_nap,
    evaluate_layout,
    groups_from_labels,
    render_grid,
    save_layout,
    save_nap,
    synth_activations,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demos/out/pipeline", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    acts = synth_activations(
        n_neurons=128,
        n_groups=10,
        n_clusters=4,
        noise=0.1,
        examples_per_group=200,
        seed=args.seed,
    )
    print(f"activations: {acts.values.shape} ({acts.layer_kind}), "
          f"{len(set(acts.group_labels.tolist()))} groups")

    spec = GroupSpec(groups=groups_from_labels(acts.group_labels), samples_per_group=200)
    nap = compute_nap(acts, spec)
    save_nap(nap, out)
    print(f"profiles: {nap.layout_features.shape} layout features, "
          f"{nap.color_values.shape} color values")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        layout = compute_layout("umap_pso", nap, seed=args.seed)
    for w in caught:
        print(f"note: {w.message}")
    save_layout(layout, out / "layout_umap_pso.json")
    print(f"layout: method={layout.method}, coords in "
          f"[{layout.coords.min():.3f}, {layout.coords.max():.3f}]")

    png = render_grid(nap, layout, out / "map_strip.png", resolution=120, sort=True)
    print(f"rendered {png}")

    blur, resize = evaluate_layout(nap, layout)
    print(f"blur AUC:   {blur.auc:.6f}")
    print(f"resize AUC: {resize.auc:.6f}")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
