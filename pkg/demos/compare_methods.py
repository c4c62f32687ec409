"""Side-by-side robustness comparison of the layout methods.

Builds one synthetic profile matrix, runs every layout method on it and
prints blur/resize AUC per method, normalized against the random
baseline.  Lower is better; every structured method and hybrid
(<base>_pso) should land well under the baseline.

Run:
    python demos/compare_methods.py
    python demos/compare_methods.py --methods pca pca_pso random_baseline
"""

from __future__ import annotations

import argparse
import time
import warnings

from topomap import METHODS, compute_layout, evaluate_layout, synth_activations
from topomap.nap import GroupSpec, compute_nap, groups_from_labels


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--methods", nargs="*", default=list(METHODS))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    acts = synth_activations(
        n_neurons=128, n_groups=10, n_clusters=4, noise=0.1,
        examples_per_group=200, seed=args.seed,
    )
    spec = GroupSpec(groups=groups_from_labels(acts.group_labels), samples_per_group=200)
    nap = compute_nap(acts, spec)

    rows = []
    for method in args.methods:
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            layout = compute_layout(method, nap, seed=args.seed)
        blur, resize = evaluate_layout(nap, layout)
        rows.append((method, blur.auc, resize.auc, time.perf_counter() - t0))

    base = dict((m, (b, r)) for m, b, r, _ in rows).get("random_baseline")
    print(f"{'method':<16} {'blur AUC':>10} {'resize AUC':>11} {'vs base':>8} {'sec':>6}")
    for method, b, r, dt in rows:
        rel = f"{(b + r) / (base[0] + base[1]):.2f}x" if base else "-"
        print(f"{method:<16} {b:>10.6f} {r:>11.6f} {rel:>8} {dt:>6.1f}")


if __name__ == "__main__":
    main()
