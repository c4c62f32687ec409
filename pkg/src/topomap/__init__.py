"""Topographic activation maps for neural network layers.

Turns hidden-layer activations into 2D neuron maps where co-activated
neurons sit together, plus quality metrics for comparing the layout
algorithms that produce them.
"""

__version__ = "0.1.0"

from .errors import ManifestError, TopomapError
from .nap import (
    ActivationSet,
    GroupSpec,
    NapMatrix,
    build_stacked_input,
    compute_nap,
    compute_nap_conv,
    compute_nap_dense,
    cosine_distance_matrix,
    groups_from_labels,
    load_activation_set,
    load_group_spec,
    load_nap,
    save_activation_set,
    save_nap,
)
from .layouts import (
    BASE_ENGINES,
    METHODS,
    Layout,
    layout_graph,
    layout_pca,
    layout_som,
    layout_tsne,
    layout_umap,
    load_layout,
    save_layout,
    scale_coordinates,
)
from .pso import (
    PsoParams,
    compute_layout,
    global_force,
    hybrid_layout,
    layout_pso,
    local_force,
    pso_optimize,
    random_baseline,
    simulate,
    weight_schedule,
)
from .render import (
    TopoImage,
    colorize,
    interpolate_field,
    order_groups,
    render_grid,
)
from .quality import (
    QualityReport,
    auc,
    blur_mse_curve,
    evaluate_layout,
    metric_image,
    resize_mse_curve,
    robustness_trials,
)
from .synth import synth_activations, write_synth

__all__ = [
    "ActivationSet",
    "BASE_ENGINES",
    "GroupSpec",
    "Layout",
    "ManifestError",
    "METHODS",
    "NapMatrix",
    "PsoParams",
    "QualityReport",
    "TopoImage",
    "TopomapError",
    "auc",
    "blur_mse_curve",
    "build_stacked_input",
    "colorize",
    "compute_layout",
    "compute_nap",
    "compute_nap_conv",
    "compute_nap_dense",
    "cosine_distance_matrix",
    "evaluate_layout",
    "global_force",
    "groups_from_labels",
    "hybrid_layout",
    "interpolate_field",
    "layout_graph",
    "layout_pca",
    "layout_pso",
    "layout_som",
    "layout_tsne",
    "layout_umap",
    "load_activation_set",
    "load_group_spec",
    "load_layout",
    "load_nap",
    "local_force",
    "metric_image",
    "order_groups",
    "pso_optimize",
    "random_baseline",
    "render_grid",
    "resize_mse_curve",
    "robustness_trials",
    "save_activation_set",
    "save_layout",
    "save_nap",
    "scale_coordinates",
    "simulate",
    "synth_activations",
    "weight_schedule",
    "write_synth",
]
