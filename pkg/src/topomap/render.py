"""Rendering of topographic activation maps.

A layout plus one scalar per neuron becomes an image: the unit square is
rasterized through Delaunay triangulation with barycentric-linear
interpolation, values are mapped through a symmetric blue-white-red
colormap, and multiple groups compose into strip or confusion grids with
a color scale shared across all panels of one figure.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy.spatial import Delaunay, QhullError
from scipy.interpolate import LinearNDInterpolator

from .errors import TopomapError
from .layouts import Layout
from .nap import NapMatrix

DISPLAY_RESOLUTION = 100
JITTER_SCALE = 1e-9
CELL_MARGIN = 4
CAPTION_HEIGHT = 14


@dataclass
class TopoImage:
    """Rasterized scalar field of one group.

    vmax is the color limit shared across all panels of the figure, not
    necessarily the max of this group alone.
    """

    field: np.ndarray
    mask: np.ndarray
    group_id: str = ""
    vmax: float = 0.0


def _jitter_duplicates(coords: np.ndarray, seed: int) -> np.ndarray:
    """Perturb repeated coordinates so triangulation sees distinct points."""
    pts = coords.copy()
    _, first, inverse, counts = np.unique(
        pts, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    dup = counts[inverse] > 1
    dup[first] = False
    if dup.any():
        rng = np.random.default_rng(seed)
        pts[dup] += rng.standard_normal((int(dup.sum()), 2)) * JITTER_SCALE
    return pts


def interpolate_field(
    layout: Layout,
    values: np.ndarray,
    resolution: int = DISPLAY_RESOLUTION,
    group_id: str = "",
    vmax: float | None = None,
) -> TopoImage:
    """Rasterize per-neuron values over the unit square.

    Pixel centers inside the convex hull of the neuron coordinates get
    barycentric-linear interpolation; outside pixels are masked out.
    Row 0 is the top of the image (y = 1).
    """
    values = np.asarray(values, dtype=np.float64)
    coords = np.asarray(layout.coords, dtype=np.float64)
    if values.shape != (coords.shape[0],):
        raise TopomapError("values length must match neuron count")
    if coords.shape[0] < 3:
        raise TopomapError("insufficient points for triangulation")
    pts = _jitter_duplicates(coords, layout.seed)
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise TopomapError("insufficient points for triangulation") from exc

    centers = (np.arange(resolution) + 0.5) / resolution
    x, y = np.meshgrid(centers, 1.0 - centers)
    sampled = LinearNDInterpolator(tri, values)(np.column_stack([x.ravel(), y.ravel()]))
    sampled = sampled.reshape(resolution, resolution)
    mask = np.isfinite(sampled)
    if vmax is None:
        vmax = float(np.abs(values).max())
    return TopoImage(
        field=np.where(mask, sampled, 0.0),
        mask=mask,
        group_id=group_id,
        vmax=float(vmax),
    )


def interpolate_many(
    layout: Layout, values_matrix: np.ndarray, resolution: int
) -> tuple[np.ndarray, np.ndarray]:
    """Rasterize all columns of an (N, G) value matrix in one pass.

    Returns (fields, mask) with fields shaped (G, resolution, resolution),
    masked-out pixels filled with 0.  Shares one triangulation across
    groups, so it is bit-identical to per-column interpolate_field calls.
    """
    values_matrix = np.asarray(values_matrix, dtype=np.float64)
    coords = np.asarray(layout.coords, dtype=np.float64)
    if values_matrix.shape[0] != coords.shape[0]:
        raise TopomapError("values rows must match neuron count")
    if coords.shape[0] < 3:
        raise TopomapError("insufficient points for triangulation")
    pts = _jitter_duplicates(coords, layout.seed)
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise TopomapError("insufficient points for triangulation") from exc
    centers = (np.arange(resolution) + 0.5) / resolution
    x, y = np.meshgrid(centers, 1.0 - centers)
    sampled = LinearNDInterpolator(tri, values_matrix)(
        np.column_stack([x.ravel(), y.ravel()])
    )
    fields = sampled.reshape(resolution, resolution, -1).transpose(2, 0, 1)
    mask = np.isfinite(fields[0])
    return np.where(np.isfinite(fields), fields, 0.0), mask


def colorize(img: TopoImage) -> np.ndarray:
    """Map the field through the diverging colormap to an RGB raster.

    -vmax -> (0,0,255), 0 -> white, +vmax -> (255,0,0); each channel is a
    linear ramp rounded half-up.  Masked-out pixels are white.
    """
    if img.vmax <= 0.0:
        return np.full((*img.field.shape, 3), 255, dtype=np.uint8)
    x = np.clip(img.field / img.vmax, -1.0, 1.0)
    low = np.floor(255.0 * (1.0 - np.abs(x)) + 0.5)
    rgb = np.empty((*x.shape, 3))
    negative = x < 0.0
    rgb[..., 0] = np.where(negative, low, 255.0)
    rgb[..., 1] = low
    rgb[..., 2] = np.where(negative, 255.0, low)
    rgb[~img.mask] = 255.0
    return rgb.astype(np.uint8)


def order_groups(nap: NapMatrix) -> list[int]:
    """Leaf order of average-linkage clustering on the group columns.

    Euclidean distances; ties and merge orientation resolved by lowest
    original column index.  Merging into the lower slot keeps each slot
    index equal to the smallest original index of its cluster, so the
    row-major argmin below implements exactly that tie-break.
    """
    cols = np.asarray(nap.color_values, dtype=np.float64).T
    g = cols.shape[0]
    if g < 2:
        return list(range(g))
    diff = cols[:, None, :] - cols[None, :, :]
    work = np.sqrt((diff**2).sum(axis=2))
    leaves: list[list[int] | None] = [[i] for i in range(g)]
    sizes = np.ones(g)
    alive = np.ones(g, dtype=bool)
    upper = np.arange(g)[:, None] < np.arange(g)[None, :]
    for _ in range(g - 1):
        candidates = np.where(upper & alive[:, None] & alive[None, :], work, np.inf)
        i, j = np.unravel_index(np.argmin(candidates), candidates.shape)
        merged = (sizes[i] * work[i] + sizes[j] * work[j]) / (sizes[i] + sizes[j])
        work[i] = merged
        work[:, i] = merged
        work[i, i] = 0.0
        sizes[i] += sizes[j]
        leaves[i] = leaves[i] + leaves[j]
        leaves[j] = None
        alive[j] = False
    return next(lv for lv in leaves if lv is not None)


def _confusion_key(group_id: str) -> tuple[str, str] | None:
    for sep in ("→", "->"):
        if sep in group_id:
            true, pred = group_id.split(sep, maxsplit=1)
            return true.strip(), pred.strip()
    return None


def _sorted_labels(labels: set[str]) -> list[str]:
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


def _compose(
    cells: list[list[np.ndarray | None]],
    captions: list[list[str]],
    resolution: int,
) -> Image.Image:
    rows = len(cells)
    columns = len(cells[0])
    cell_h = resolution + CAPTION_HEIGHT + CELL_MARGIN
    cell_w = resolution + CELL_MARGIN
    canvas = np.full(
        (rows * cell_h + CELL_MARGIN, columns * cell_w + CELL_MARGIN, 3),
        255,
        dtype=np.uint8,
    )
    for r in range(rows):
        for c in range(columns):
            if cells[r][c] is None:
                continue
            top = CELL_MARGIN + r * cell_h
            left = CELL_MARGIN + c * cell_w
            canvas[top : top + resolution, left : left + resolution] = cells[r][c]
    image = Image.fromarray(canvas)
    draw = ImageDraw.Draw(image)
    font = ImageFont.load_default()
    for r in range(rows):
        for c in range(columns):
            text = captions[r][c]
            if not text:
                continue
            box = draw.textbbox((0, 0), text, font=font)
            width = box[2] - box[0]
            x = CELL_MARGIN + c * cell_w + (resolution - width) / 2
            y = CELL_MARGIN + r * cell_h + resolution + 1
            draw.text((x, y), text, fill=(0, 0, 0), font=font)
    return image


def _write_svg(image: Image.Image, path: Path) -> None:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    payload = base64.b64encode(buffer.getvalue()).decode("ascii")
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{image.width}" height="{image.height}">'
        f'<image width="{image.width}" height="{image.height}" '
        f'xlink:href="data:image/png;base64,{payload}"/></svg>\n'
    )


def render_grid(
    nap: NapMatrix,
    layout: Layout,
    output: str | Path,
    groups: list[str] | None = None,
    mode: str = "strip",
    resolution: int = DISPLAY_RESOLUTION,
    sort: bool = False,
    svg: bool = False,
) -> Path:
    """Render one topomap per group into a strip or confusion grid PNG.

    The color limit is the max absolute color value over the included
    groups, so a given value maps to the same color in every panel.
    Confusion mode reads "true->predicted" group ids and leaves cells of
    absent groups blank.
    """
    if list(layout.neuron_ids) != list(nap.neuron_ids):
        raise TopomapError("neuron ids of layout and NAP do not match")
    if mode not in ("strip", "confusion"):
        raise TopomapError(f"unknown grid mode {mode!r}")

    available = {gid: k for k, gid in enumerate(nap.group_ids)}
    if groups is None:
        selected = list(nap.group_ids)
    else:
        missing = [gid for gid in groups if gid not in available]
        if missing:
            raise TopomapError(f"unknown group ids: {missing}")
        selected = list(groups)
    if not selected:
        raise TopomapError("no groups to render")

    vmax = float(np.abs(nap.color_values[:, [available[g] for g in selected]]).max())

    def panel(gid: str) -> np.ndarray:
        img = interpolate_field(
            layout, nap.color_values[:, available[gid]], resolution, gid, vmax
        )
        return colorize(img)

    if mode == "strip":
        if sort and len(selected) > 1:
            sub = NapMatrix(
                layout_features=nap.layout_features,
                color_values=nap.color_values[:, [available[g] for g in selected]],
                group_ids=selected,
                neuron_ids=list(nap.neuron_ids),
                mode=nap.mode,
                seed=nap.seed,
            )
            selected = [selected[i] for i in order_groups(sub)]
        cells = [[panel(gid) for gid in selected]]
        captions = [list(selected)]
    else:
        keys = {}
        for gid in selected:
            key = _confusion_key(gid)
            if key is None:
                raise TopomapError(
                    f"group id {gid!r} is not of the form 'true->predicted'"
                )
            keys[key] = gid
        trues = _sorted_labels({t for t, _ in keys})
        preds = _sorted_labels({p for _, p in keys})
        cells = [
            [panel(keys[(t, p)]) if (t, p) in keys else None for p in preds]
            for t in trues
        ]
        captions = [
            [keys.get((t, p), "") for p in preds]
            for t in trues
        ]

    image = _compose(cells, captions, resolution)
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    image.save(output, format="PNG")
    if svg:
        _write_svg(image, output.with_suffix(".svg"))
    return output
