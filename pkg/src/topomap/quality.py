"""Quality metrics for topographic maps.

A good map places co-activated neurons together, producing large
single-color regions that survive degradation.  Two degradations are
measured on a 300x300 normalized render: Gaussian blur at increasing
radii and bicubic down/up-resizing at decreasing sizes.  The area under
each MSE curve (trapezoid rule, width 1) summarizes a layout; lower is
better.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from .errors import TopomapError
from .layouts import Layout
from .nap import NapMatrix
from .pso import PsoParams, compute_layout
from .render import interpolate_field, interpolate_many

BLUR_RADII = tuple(range(2, 21, 2))
RESIZE_SIZES = tuple(range(55, 9, -5))
METRIC_RESOLUTION = 300
BICUBIC_A = -0.5


@dataclass
class QualityReport:
    metric: str
    params: tuple
    per_param_mse: np.ndarray
    auc: float
    trials: list[float] | None = None
    seeds: dict = field(default_factory=dict)


def metric_image(
    nap: NapMatrix,
    layout: Layout,
    group: int,
    resolution: int = METRIC_RESOLUTION,
    vmax: float | None = None,
) -> np.ndarray:
    """Normalized scalar render of one group: values mapped to [0,1].

    Outside-hull pixels take the neutral NAP value 0, i.e. 0.5 after
    normalization, so the hull boundary itself is not scored as an edge.
    vmax defaults to the figure-wide max over all groups of the NAP.
    """
    if vmax is None:
        vmax = float(np.abs(nap.color_values).max())
    if vmax <= 0.0:
        return np.full((resolution, resolution), 0.5)
    img = interpolate_field(
        layout, nap.color_values[:, group], resolution, nap.group_ids[group], vmax
    )
    return (img.field + vmax) / (2.0 * vmax)


def _metric_stack(nap: NapMatrix, layout: Layout, resolution: int) -> np.ndarray:
    """(G, R, R) stack of normalized metric images, one triangulation."""
    vmax = float(np.abs(nap.color_values).max())
    if vmax <= 0.0:
        return np.full((nap.n_groups, resolution, resolution), 0.5)
    fields, _ = interpolate_many(layout, nap.color_values, resolution)
    return (fields + vmax) / (2.0 * vmax)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    half = math.ceil(3.0 * sigma)
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _blur_curves(stack: np.ndarray) -> np.ndarray:
    """(len(BLUR_RADII), G) MSE matrix for a (G, R, R) image stack."""
    curves = np.empty((len(BLUR_RADII), stack.shape[0]))
    for i, radius in enumerate(BLUR_RADII):
        kernel = _gaussian_kernel(radius / 2.0)
        blurred = convolve1d(stack, kernel, axis=1, mode="mirror")
        blurred = convolve1d(blurred, kernel, axis=2, mode="mirror")
        curves[i] = ((blurred - stack) ** 2).mean(axis=(1, 2))
    return curves


def blur_mse_curve(img: np.ndarray) -> np.ndarray:
    """MSE between the image and its Gaussian blur at radii 2..20 step 2.

    sigma = radius/2, kernel half-width ceil(3*sigma), mirror borders.
    """
    return _blur_curves(np.asarray(img, dtype=np.float64)[None])[:, 0]


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    a = BICUBIC_A
    at = np.abs(t)
    near = (a + 2.0) * at**3 - (a + 3.0) * at**2 + 1.0
    far = a * at**3 - 5.0 * a * at**2 + 8.0 * a * at - 4.0 * a
    return np.where(at <= 1.0, near, np.where(at < 2.0, far, 0.0))


_RESAMPLE_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _resample_matrix(src: int, dst: int) -> np.ndarray:
    """(dst, src) bicubic row-resampling matrix.

    Downscaling stretches the kernel support by the scale factor, which
    low-passes before subsampling; without it the MSE metric aliases and
    stops growing monotonically with the downscale factor.  Windows are
    clipped at the borders and renormalized to sum 1, so constants are
    reproduced exactly.  Both conventions match PIL's BICUBIC resize.
    """
    key = (src, dst)
    if key not in _RESAMPLE_CACHE:
        scale = src / dst
        fscale = max(scale, 1.0)
        support = 2.0 * fscale
        weights = np.zeros((dst, src))
        for row in range(dst):
            center = (row + 0.5) * scale
            lo = max(int(np.floor(center - support + 0.5)), 0)
            hi = min(int(np.floor(center + support + 0.5)), src)
            w = _catmull_rom((np.arange(lo, hi) + 0.5 - center) / fscale)
            weights[row, lo:hi] = w / w.sum()
        _RESAMPLE_CACHE[key] = weights
    return _RESAMPLE_CACHE[key]


def _apply_separable(stack: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply a row-resampling matrix to both axes of every image.

    tensordot turns the per-image products M @ img @ M.T into two large
    GEMMs over the whole (G, r, r) stack; the second contraction emits
    transposed images, fixed by the final axis swap.
    """
    t1 = np.tensordot(stack, matrix, axes=([2], [1]))
    return np.tensordot(t1, matrix, axes=([1], [1])).transpose(0, 2, 1)


def _resize_curves(stack: np.ndarray) -> np.ndarray:
    """(len(RESIZE_SIZES), G) MSE matrix for a (G, R, R) image stack."""
    r = stack.shape[1]
    curves = np.empty((len(RESIZE_SIZES), stack.shape[0]))
    for i, size in enumerate(RESIZE_SIZES):
        small = _apply_separable(stack, _resample_matrix(r, size))
        restored = np.clip(_apply_separable(small, _resample_matrix(size, r)), 0.0, 1.0)
        curves[i] = ((restored - stack) ** 2).mean(axis=(1, 2))
    return curves


def resize_mse_curve(img: np.ndarray) -> np.ndarray:
    """MSE after bicubic downscale to s in 55..10 step -5 and upscale back."""
    return _resize_curves(np.asarray(img, dtype=np.float64)[None])[:, 0]


def auc(curve: np.ndarray) -> float:
    """Trapezoid-rule area with unit spacing between curve points."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.size < 2:
        raise TopomapError("AUC needs a curve of length >= 2")
    return float((0.5 * (curve[:-1] + curve[1:])).sum())


def evaluate_layout(
    nap: NapMatrix, layout: Layout, resolution: int = METRIC_RESOLUTION
) -> tuple[QualityReport, QualityReport]:
    """Blur and resize reports: per-group curves averaged, then AUC."""
    stack = _metric_stack(nap, layout, resolution)
    provenance = {
        "method": layout.method,
        "layout_seed": layout.seed,
        "nap_seed": nap.seed,
        "resolution": resolution,
    }
    blur_curve = _blur_curves(stack).mean(axis=1)
    resize_curve = _resize_curves(stack).mean(axis=1)
    return (
        QualityReport("blur", BLUR_RADII, blur_curve, auc(blur_curve), seeds=provenance),
        QualityReport(
            "resize", RESIZE_SIZES, resize_curve, auc(resize_curve), seeds=provenance
        ),
    )


def _trial(args) -> tuple[np.ndarray, np.ndarray]:
    nap, method, trial_seed, pso_params, engine_kwargs = args
    layout = compute_layout(
        method, nap, seed=trial_seed, pso_params=pso_params, **engine_kwargs
    )
    blur_report, resize_report = evaluate_layout(nap, layout)
    return blur_report.per_param_mse, resize_report.per_param_mse


def robustness_trials(
    nap_source,
    method: str,
    n_trials: int = 100,
    resample: bool = False,
    seed: int = 0,
    jobs: int = 1,
    pso_params: PsoParams | None = None,
    **engine_kwargs,
) -> tuple[QualityReport, QualityReport]:
    """Repeat layout+evaluation n_trials times; trial k uses seed+k.

    resample=False reuses one NapMatrix and varies only the layout seed;
    resample=True calls nap_source(seed+k) to rebuild the NAP per trial.
    nap_source is a NapMatrix, or a callable seed -> NapMatrix (required
    when resample=True).
    """
    if n_trials < 2:
        raise TopomapError("n_trials must be >= 2")
    trial_seeds = [seed + k for k in range(n_trials)]
    if resample:
        if not callable(nap_source):
            raise TopomapError("resample=True needs a callable NAP builder")
        naps = [nap_source(s) for s in trial_seeds]
    else:
        base = nap_source(seed) if callable(nap_source) else nap_source
        naps = [base] * n_trials
    work = [(naps[k], method, trial_seeds[k], pso_params, engine_kwargs) for k in range(n_trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, work))
    else:
        results = [_trial(w) for w in work]

    reports = []
    for metric, params, curves in (
        ("blur", BLUR_RADII, [r[0] for r in results]),
        ("resize", RESIZE_SIZES, [r[1] for r in results]),
    ):
        trial_aucs = [auc(c) for c in curves]
        mean_curve = np.mean(curves, axis=0)
        reports.append(
            QualityReport(
                metric=metric,
                params=params,
                per_param_mse=mean_curve,
                auc=auc(mean_curve),
                trials=trial_aucs,
                seeds={
                    "method": method,
                    "base_seed": seed,
                    "trial_seeds": trial_seeds,
                    "resample": resample,
                    "mean": float(np.mean(trial_aucs)),
                    "min": float(np.min(trial_aucs)),
                    "max": float(np.max(trial_aucs)),
                },
            )
        )
    return reports[0], reports[1]


def report_to_dict(report: QualityReport) -> dict:
    return {
        "metric": report.metric,
        "params": list(report.params),
        "per_param_mse": [float(v) for v in report.per_param_mse],
        "auc": report.auc,
        "trials": report.trials,
        "seeds": report.seeds,
    }


def save_report(report: QualityReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    return path
