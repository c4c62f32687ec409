"""Command-line frontend: activations -> profiles -> layout -> images -> metrics.

Subcommands: nap, layout, render, eval, synth, pipeline.  Every run
writes a provenance JSON capturing package versions, seeds and
parameters (never timestamps), so identical invocations produce
byte-identical artifacts.  Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numba
import numpy as np
import PIL
import scipy

from . import __version__
from .errors import TopomapError
from .layouts import METHODS, load_layout, save_layout
from .nap import (
    DEFAULT_RANDOM_TOTAL,
    DEFAULT_SAMPLES_PER_GROUP,
    GroupSpec,
    compute_nap,
    groups_from_labels,
    load_activation_set,
    load_group_spec,
    load_nap,
    save_nap,
)
from .pso import PsoParams, compute_layout
from .quality import evaluate_layout, robustness_trials, save_report
from .render import render_grid
from .synth import write_synth

# maps CLI flag destinations to engine keyword names, per base method
ENGINE_FLAGS = {
    "som": {"som_epochs": "epochs"},
    "graph": {"edge_fraction": "edge_fraction", "fr_iterations": "fr_iterations"},
    "pca": {},
    "tsne": {"perplexity": "perplexity", "tsne_iterations": "iterations"},
    "umap": {"n_neighbors": "n_neighbors", "min_dist": "min_dist", "umap_epochs": "epochs"},
}


def _write_provenance(out_dir: Path, command: str, parameters: dict, outputs: list[str]) -> Path:
    record = {
        "command": command,
        "versions": {
            "topomap": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "pillow": PIL.__version__,
        },
        "parameters": parameters,
        "outputs": outputs,
    }
    path = out_dir / f"provenance_{command}.json"
    out_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def _engine_kwargs(args: argparse.Namespace, method: str) -> dict:
    base = method[:-4] if method.endswith("_pso") else method
    mapping = ENGINE_FLAGS.get(base, {})
    return {
        kw: getattr(args, flag)
        for flag, kw in mapping.items()
        if getattr(args, flag, None) is not None
    }


def _pso_params(args: argparse.Namespace) -> PsoParams | None:
    steps = getattr(args, "steps", None)
    step_size = getattr(args, "step_size", None)
    eq1_literal = bool(getattr(args, "eq1_literal", False))
    if steps is None and step_size is None and not eq1_literal:
        return None
    return PsoParams(
        steps=steps if steps is not None else 1000,
        step_size=step_size,
        eq1_literal=eq1_literal,
    )


def _build_nap(
    manifest: str,
    groups_file: str | None,
    mode: str,
    samples: int | None,
    random_total: int | None,
    seed: int,
):
    acts = load_activation_set(manifest)
    acts.seed = seed
    if groups_file is not None:
        spec = load_group_spec(groups_file, labels=acts.group_labels)
        spec.mode = mode
        if samples is not None:
            spec.samples_per_group = samples
        if random_total is not None:
            spec.random_total = random_total
    else:
        spec = GroupSpec(
            groups=groups_from_labels(acts.group_labels),
            samples_per_group=samples if samples is not None else DEFAULT_SAMPLES_PER_GROUP,
            mode=mode,
            random_total=random_total if random_total is not None else DEFAULT_RANDOM_TOTAL,
        )
    return compute_nap(acts, spec)


# ---------------------------------------------------------------------------
# subcommands


def cmd_nap(args: argparse.Namespace) -> int:
    out = Path(args.out)
    nap = _build_nap(
        args.manifest, args.groups, args.mode, args.samples, args.random_total, args.seed
    )
    nap_path = save_nap(nap, out, stem=args.name)
    _write_provenance(
        out,
        "nap",
        {
            "manifest": str(args.manifest),
            "groups": args.groups,
            "mode": args.mode,
            "samples_per_group": args.samples,
            "random_total": args.random_total,
            "seed": args.seed,
        },
        [nap_path.name],
    )
    print(nap_path)
    return 0


def cmd_layout(args: argparse.Namespace) -> int:
    out = Path(args.out)
    nap = load_nap(args.nap)
    layout = compute_layout(
        args.method,
        nap,
        seed=args.seed,
        pso_params=_pso_params(args),
        **_engine_kwargs(args, args.method),
    )
    name = args.name or f"layout_{args.method}.json"
    path = save_layout(layout, out / name)
    _write_provenance(
        out,
        "layout",
        {
            "nap": str(args.nap),
            "method": args.method,
            "seed": args.seed,
            "engine": _engine_kwargs(args, args.method),
            "pso": layout.params,
        },
        [path.name],
    )
    print(path)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    out = Path(args.out)
    nap = load_nap(args.nap)
    layout = load_layout(args.layout)
    groups = None
    mode = args.mode
    sort = args.sort
    if args.grid is not None:
        descriptor = json.loads(Path(args.grid).read_text())
        rows = descriptor.get("rows")
        if rows:
            groups = [row["group_id"] for row in rows]
        if mode is None:
            mode = descriptor.get("mode")
        if sort is None:
            sort = bool(descriptor.get("sort", False))
    if args.groups is not None:
        groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    mode = mode or "strip"
    sort = bool(sort)
    name = args.name or f"map_{mode}.png"
    path = render_grid(
        nap,
        layout,
        out / name,
        groups=groups,
        mode=mode,
        resolution=args.resolution,
        sort=sort,
        svg=args.svg,
    )
    outputs = [path.name] + ([path.with_suffix(".svg").name] if args.svg else [])
    _write_provenance(
        out,
        "render",
        {
            "nap": str(args.nap),
            "layout": str(args.layout),
            "mode": mode,
            "sort": sort,
            "resolution": args.resolution,
            "groups": groups,
            "svg": args.svg,
        },
        outputs,
    )
    print(path)
    return 0


def _write_trials_csv(path: Path, method: str, reports) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "method", "metric", "auc"])
        for report in reports:
            for k, value in enumerate(report.trials or []):
                writer.writerow([k, method, report.metric, repr(value)])


def cmd_eval(args: argparse.Namespace) -> int:
    out = Path(args.out)
    nap = load_nap(args.nap)
    outputs: list[str] = []
    if args.trials is None:
        if args.layout is None:
            raise TopomapError("eval needs --layout, or --method with --trials")
        layout = load_layout(args.layout)
        method = layout.method
        blur, resize = evaluate_layout(nap, layout)
    else:
        if args.method is None:
            raise TopomapError("--trials needs --method")
        method = args.method
        if args.resample:
            if args.manifest is None:
                raise TopomapError("--resample needs --manifest to rebuild profiles")

            def nap_source(seed: int):
                return _build_nap(
                    args.manifest, args.groups, args.mode, args.samples,
                    args.random_total, seed,
                )
        else:
            nap_source = nap
        blur, resize = robustness_trials(
            nap_source,
            method,
            n_trials=args.trials,
            resample=args.resample,
            seed=args.seed,
            jobs=args.jobs,
            pso_params=_pso_params(args),
            **_engine_kwargs(args, method),
        )
        csv_path = out / "quality_trials.csv"
        out.mkdir(parents=True, exist_ok=True)
        _write_trials_csv(csv_path, method, (blur, resize))
        outputs.append(csv_path.name)
    outputs.insert(0, save_report(blur, out / "quality_blur.json").name)
    outputs.insert(1, save_report(resize, out / "quality_resize.json").name)
    _write_provenance(
        out,
        "eval",
        {
            "nap": str(args.nap),
            "layout": args.layout and str(args.layout),
            "method": method,
            "trials": args.trials,
            "resample": args.resample,
            "seed": args.seed,
            "jobs": args.jobs,
        },
        outputs,
    )
    print(out / "quality_blur.json")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    manifest = write_synth(
        out,
        n_neurons=args.neurons,
        n_groups=args.groups,
        n_clusters=args.clusters,
        noise=args.noise,
        examples_per_group=args.examples,
        seed=args.seed,
    )
    _write_provenance(
        out,
        "synth",
        {
            "n_neurons": args.neurons,
            "n_groups": args.groups,
            "n_clusters": args.clusters,
            "noise": args.noise,
            "examples_per_group": args.examples,
            "seed": args.seed,
        },
        [manifest.name],
    )
    print(manifest)
    return 0


def _stage(name: str):
    """Prefix domain errors with the failing pipeline stage."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and issubclass(exc_type, TopomapError):
                raise TopomapError(f"stage {name!r} failed: {exc}") from exc
            return False

    return _Ctx()


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = {}
    if args.config is not None:
        config = json.loads(Path(args.config).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    synth_cfg = config.get("synth")
    manifest = args.manifest or config.get("manifest")
    nap_cfg = dict(config.get("nap", {}))
    layout_cfg = dict(config.get("layout", {}))
    render_cfg = dict(config.get("render", {}))
    eval_cfg = dict(config.get("eval", {}))

    # flag overrides
    seed = args.seed if args.seed is not None else nap_cfg.get("seed", 0)
    method = args.method or layout_cfg.get("method", "umap_pso")
    layout_seed = args.seed if args.seed is not None else layout_cfg.get("seed", 0)
    trials = args.trials if args.trials is not None else eval_cfg.get("trials")
    jobs = args.jobs if args.jobs is not None else eval_cfg.get("jobs", 1)
    resolution = (
        args.resolution if args.resolution is not None else render_cfg.get("resolution", 100)
    )
    sort = args.sort if args.sort is not None else bool(render_cfg.get("sort", False))
    svg = args.svg if args.svg is not None else bool(render_cfg.get("svg", False))
    render_mode = args.render_mode or render_cfg.get("mode", "strip")

    if manifest is None:
        synth_cfg = dict(synth_cfg or {})
        with _stage("synth"):
            manifest = write_synth(
                out,
                n_neurons=int(synth_cfg.get("n_neurons", 128)),
                n_groups=int(synth_cfg.get("n_groups", 10)),
                n_clusters=int(synth_cfg.get("n_clusters", 4)),
                noise=float(synth_cfg.get("noise", 0.1)),
                examples_per_group=int(synth_cfg.get("examples_per_group", 200)),
                seed=int(synth_cfg.get("seed", seed)),
            )

    with _stage("nap"):
        nap = _build_nap(
            str(manifest),
            nap_cfg.get("groups"),
            nap_cfg.get("mode", "naps"),
            nap_cfg.get("samples_per_group"),
            nap_cfg.get("random_total"),
            seed,
        )
        nap_path = save_nap(nap, out)

    pso_params = _pso_params(args)
    if pso_params is None and "pso" in layout_cfg:
        pso_cfg = layout_cfg["pso"]
        pso_params = PsoParams(
            steps=int(pso_cfg.get("steps", 1000)),
            step_size=pso_cfg.get("step_size"),
            eq1_literal=bool(pso_cfg.get("eq1_literal", False)),
        )
    with _stage("layout"):
        layout = compute_layout(
            method,
            nap,
            seed=layout_seed,
            pso_params=pso_params,
            **layout_cfg.get("params", {}),
        )
        layout_path = save_layout(layout, out / f"layout_{method}.json")

    with _stage("render"):
        image_path = render_grid(
            nap,
            layout,
            out / f"map_{render_mode}.png",
            groups=render_cfg.get("groups"),
            mode=render_mode,
            resolution=resolution,
            sort=sort,
            svg=svg,
        )

    outputs = [nap_path.name, layout_path.name, image_path.name]
    with _stage("eval"):
        if trials:
            blur, resize = robustness_trials(
                nap,
                method,
                n_trials=int(trials),
                resample=False,
                seed=layout_seed,
                jobs=int(jobs),
                pso_params=pso_params,
                **layout_cfg.get("params", {}),
            )
            csv_path = out / "quality_trials.csv"
            _write_trials_csv(csv_path, method, (blur, resize))
            outputs.append(csv_path.name)
        else:
            blur, resize = evaluate_layout(nap, layout)
    outputs.append(save_report(blur, out / "quality_blur.json").name)
    outputs.append(save_report(resize, out / "quality_resize.json").name)

    _write_provenance(
        out,
        "pipeline",
        {
            "config": args.config and str(args.config),
            "manifest": str(manifest),
            "nap": {"mode": nap_cfg.get("mode", "naps"), "seed": seed},
            "layout": {"method": method, "seed": layout_seed, "pso": layout.params},
            "render": {
                "mode": render_mode,
                "resolution": resolution,
                "sort": sort,
                "svg": svg,
            },
            "eval": {"trials": trials, "jobs": jobs},
        },
        outputs,
    )
    print(out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("engine parameters")
    group.add_argument("--som-epochs", type=int, help="SOM training epochs")
    group.add_argument("--edge-fraction", type=float, help="graph: fraction of pairs kept as edges")
    group.add_argument("--fr-iterations", type=int, help="graph: force-directed iterations")
    group.add_argument("--perplexity", type=float, help="t-SNE perplexity")
    group.add_argument("--tsne-iterations", type=int, help="t-SNE iterations")
    group.add_argument("--n-neighbors", type=int, help="UMAP neighborhood size")
    group.add_argument("--min-dist", type=float, help="UMAP minimum embedding distance")
    group.add_argument("--umap-epochs", type=int, help="UMAP SGD epochs")
    group.add_argument("--steps", type=int, help="particle simulation steps")
    group.add_argument("--step-size", type=float, help="particle step size (default 0.05/N)")
    group.add_argument(
        "--eq1-literal",
        action="store_true",
        help="global force: cube max(dist) alone instead of the quotient",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topomap",
        description="Topographic activation maps: profiles, layouts, images, metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_nap = sub.add_parser("nap", help="compute profiles from an activation manifest")
    p_nap.add_argument("--manifest", required=True)
    p_nap.add_argument("--groups", help="GroupSpec JSON (default: one group per label)")
    p_nap.add_argument("--mode", choices=["naps", "balanced", "random"], default="naps")
    p_nap.add_argument("--samples", type=int, help="examples sampled per group")
    p_nap.add_argument("--random-total", type=int, help="total examples in mode=random")
    p_nap.add_argument("--seed", type=int, default=0)
    p_nap.add_argument("--name", default="nap", help="output file stem")
    p_nap.add_argument("-o", "--out", default=".")
    p_nap.set_defaults(func=cmd_nap)

    p_layout = sub.add_parser("layout", help="compute a 2D layout from a profile file")
    p_layout.add_argument("--nap", required=True)
    p_layout.add_argument("--method", required=True, choices=list(METHODS))
    p_layout.add_argument("--seed", type=int, default=0)
    p_layout.add_argument("--name", help="output file name")
    p_layout.add_argument("-o", "--out", default=".")
    _add_engine_flags(p_layout)
    p_layout.set_defaults(func=cmd_layout)

    p_render = sub.add_parser("render", help="render topographic map images")
    p_render.add_argument("--nap", required=True)
    p_render.add_argument("--layout", required=True)
    p_render.add_argument("--grid", help="grid descriptor JSON")
    p_render.add_argument("--mode", choices=["strip", "confusion"])
    p_render.add_argument("--sort", action=argparse.BooleanOptionalAction)
    p_render.add_argument("--resolution", type=int, default=100)
    p_render.add_argument("--groups", help="comma-separated group ids")
    p_render.add_argument("--svg", action="store_true")
    p_render.add_argument("--name", help="output file name")
    p_render.add_argument("-o", "--out", default=".")
    p_render.set_defaults(func=cmd_render)

    p_eval = sub.add_parser("eval", help="quality metrics for a layout or method")
    p_eval.add_argument("--nap", required=True)
    p_eval.add_argument("--layout", help="evaluate one stored layout")
    p_eval.add_argument("--method", choices=list(METHODS), help="method for --trials")
    p_eval.add_argument("--trials", type=int, help="robustness trial count")
    p_eval.add_argument("--resample", action="store_true")
    p_eval.add_argument("--manifest", help="activation manifest (for --resample)")
    p_eval.add_argument("--groups", help="GroupSpec JSON (for --resample)")
    p_eval.add_argument("--mode", choices=["naps", "balanced", "random"], default="naps")
    p_eval.add_argument("--samples", type=int)
    p_eval.add_argument("--random-total", type=int)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--jobs", type=int, default=1)
    p_eval.add_argument("-o", "--out", default=".")
    _add_engine_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate planted-cluster activations")
    p_synth.add_argument("--neurons", type=int, default=128)
    p_synth.add_argument("--groups", type=int, default=10)
    p_synth.add_argument("--clusters", type=int, default=4)
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--examples", type=int, default=200)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("-o", "--out", default=".")
    p_synth.set_defaults(func=cmd_synth)

    p_pipe = sub.add_parser("pipeline", help="synth/ingest -> nap -> layout -> render -> eval")
    p_pipe.add_argument("--config", help="pipeline config JSON; flags override")
    p_pipe.add_argument("--manifest")
    p_pipe.add_argument("--method", choices=list(METHODS))
    p_pipe.add_argument("--seed", type=int)
    p_pipe.add_argument("--trials", type=int)
    p_pipe.add_argument("--jobs", type=int)
    p_pipe.add_argument("--resolution", type=int)
    p_pipe.add_argument("--sort", action=argparse.BooleanOptionalAction)
    p_pipe.add_argument("--svg", action=argparse.BooleanOptionalAction)
    p_pipe.add_argument("--render-mode", choices=["strip", "confusion"])
    p_pipe.add_argument("-o", "--out", default=".")
    _add_engine_flags(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TopomapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
