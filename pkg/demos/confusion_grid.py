"""Confusion-matrix grid of per-outcome activation maps.

Simulates a noisy classifier on synthetic activations: each example's
predicted label matches its true label except for a seeded fraction of
errors.  Examples are grouped by outcome ("true->predicted"), so the
diagonal panels show correct classifications and off-diagonal panels
show specific error types, all on a shared neuron layout.

Run:
    python demos/confusion_grid.py --out demos/out/confusion
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from topomap import GroupSpec, compute_layout, compute_nap, render_grid, synth_activations


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demos/out/confusion")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--error-rate", type=float, default=0.15)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    acts = synth_activations(
        n_neurons=64, n_groups=4, n_clusters=4, noise=0.1,
        examples_per_group=300, seed=args.seed,
    )
    true = acts.group_labels
    n_classes = int(true.max()) + 1

    rng = np.random.default_rng(args.seed)
    pred = true.copy()
    flip = rng.random(len(true)) < args.error_rate
    pred[flip] = (true[flip] + rng.integers(1, n_classes, size=flip.sum())) % n_classes
    print(f"simulated classifier: {flip.sum()} / {len(true)} examples misclassified")

    groups = []
    for t in range(n_classes):
        for p in range(n_classes):
            members = np.flatnonzero((true == t) & (pred == p))
            if len(members):
                groups.append((f"{t}->{p}", members))
    counts = {gid: len(m) for gid, m in groups}
    print(f"outcome groups: {counts}")

    smallest = min(counts.values())
    spec = GroupSpec(groups=groups, samples_per_group=smallest)
    nap = compute_nap(acts, spec)
    layout = compute_layout("pca_pso", nap, seed=args.seed)

    png = render_grid(nap, layout, out / "confusion.png", mode="confusion", resolution=100)
    print(f"rendered {png}")
    print("diagonal cells = correct classes, off-diagonal = error types, "
          "blank cells = outcomes never observed")


if __name__ == "__main__":
    main()
