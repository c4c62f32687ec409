"""What the blur/resize metrics actually measure.

Interpolates one group's profile field at metric resolution for a
structured layout (pca_pso) and for the random baseline, then prints the
per-parameter MSE curves.  A layout that places similar neurons together
produces a smooth field that survives blurring and downsampling, so its
curve stays near zero; the baseline's curve climbs quickly.

Run:
    python demos/quality_curves.py
"""

from __future__ import annotations

import argparse

import numpy as np

from topomap import (
    auc,
    blur_mse_curve,
    compute_layout,
    metric_image,
    resize_mse_curve,
    synth_activations,
)
from topomap.nap import GroupSpec, compute_nap, groups_from_labels
from topomap.quality import BLUR_RADII, RESIZE_SIZES


def curve_line(params, curve) -> str:
    return "  ".join(f"{p}:{v:.5f}" for p, v in zip(params, curve))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--group", type=int, default=0, help="group column to rasterize")
    args = ap.parse_args()

    acts = synth_activations(
        n_neurons=128, n_groups=10, n_clusters=4, noise=0.1,
        examples_per_group=200, seed=args.seed,
    )
    spec = GroupSpec(groups=groups_from_labels(acts.group_labels), samples_per_group=200)
    nap = compute_nap(acts, spec)

    for method in ("pca_pso", "random_baseline"):
        layout = compute_layout(method, nap, seed=args.seed)
        img = metric_image(nap, layout, group=args.group)
        print(f"{method}: field {img.shape}, "
              f"values in [{img.min():.3f}, {img.max():.3f}]")
        bc = blur_mse_curve(img)
        rc = resize_mse_curve(img)
        print(f"  blur   radii {curve_line(BLUR_RADII, bc)}")
        print(f"  resize sizes {curve_line(RESIZE_SIZES, rc)}")
        print(f"  blur AUC {auc(bc):.6f}   resize AUC {auc(rc):.6f}")

    rng = np.random.default_rng(args.seed)
    noise = rng.random((300, 300))
    print(f"pure noise field for scale: blur AUC {auc(blur_mse_curve(noise)):.6f}")


if __name__ == "__main__":
    main()
