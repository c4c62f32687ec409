"""Layout engines that map profile rows to 2D coordinates."""

from .base import METHODS, Layout, load_layout, save_layout, scale_coordinates
from .graph import (
    build_coactivation_graph,
    fruchterman_reingold,
    layout_graph,
    link_components,
    threshold_edges,
)
from .pca import layout_pca, pca_project
from .som import layout_som, place_on_grid, som_positions, train_som
from .tsne import layout_tsne, tsne_embed
from .umap import fit_curve_params, fuzzy_graph, layout_umap, umap_embed

# engines that consume NAP features directly; hybrids and the baseline
# are dispatched in topomap.pso
BASE_ENGINES = {
    "som": layout_som,
    "graph": layout_graph,
    "pca": layout_pca,
    "tsne": layout_tsne,
    "umap": layout_umap,
}

__all__ = [
    "BASE_ENGINES",
    "METHODS",
    "Layout",
    "build_coactivation_graph",
    "fit_curve_params",
    "fruchterman_reingold",
    "fuzzy_graph",
    "layout_graph",
    "layout_pca",
    "layout_som",
    "layout_tsne",
    "layout_umap",
    "link_components",
    "load_layout",
    "pca_project",
    "place_on_grid",
    "save_layout",
    "scale_coordinates",
    "som_positions",
    "threshold_edges",
    "train_som",
    "tsne_embed",
    "umap_embed",
]
