"""Command line front end mirroring ExportJob."""

from __future__ import annotations

import argparse
import json
import sys

from .export import GROUP_MODES, ExportJob, export_activations


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tmexport",
        description="Train a small model and export hidden-layer activations "
        "as a map-engine manifest.",
    )
    ap.add_argument("--model", choices=("mlp", "cnn"), default="mlp")
    ap.add_argument("--layer", default="fc1", help="export layer name (fc1, conv1, conv2)")
    ap.add_argument("--dataset", choices=("auto", "mnist", "digits"), default="auto")
    ap.add_argument("--data-root", default="data", help="download/cache directory")
    ap.add_argument("--split", choices=("train", "test"), default="test")
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--corrupt", type=float, default=0.0, metavar="F",
                    help="relabel fraction F of one class before training")
    ap.add_argument("--corrupt-from", type=int, default=0, metavar="A")
    ap.add_argument("--corrupt-to", type=int, default=1, metavar="B")
    ap.add_argument("--corrupt-split", choices=("train", "test"), default="train")
    ap.add_argument("--samples", type=int, default=None,
                    help="samples_per_group in the written group specs")
    ap.add_argument("--group-modes", nargs="*", choices=GROUP_MODES, default=list(GROUP_MODES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--stem", default="", help="output file stem (default <model>_<layer>)")
    ap.add_argument("-o", "--out", default="export")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            model=args.model,
            layer=args.layer,
            dataset=args.dataset,
            data_root=args.data_root,
            split=args.split,
            epochs=args.epochs,
            corrupt_fraction=args.corrupt,
            corrupt_src=args.corrupt_from,
            corrupt_dst=args.corrupt_to,
            corrupt_split=args.corrupt_split,
            samples_per_group=args.samples,
            seed=args.seed,
            out_dir=args.out,
            stem=args.stem,
            group_modes=tuple(args.group_modes),
        )
        manifest_path = export_activations(job)
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    log = json.loads((manifest_path.parent / f"{job.stem}_log.json").read_text())
    print(f"dataset: {log['dataset']} ({log['examples']} {job.split} examples)")
    print(f"accuracy on {job.split}: {log['accuracy']:.4f}")
    print(f"manifest: {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
