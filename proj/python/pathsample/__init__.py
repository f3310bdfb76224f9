"""Path sampling, path measures and margin bounds for positive homogeneous networks."""

from ._core import (
    Network,
    PathSampleError,
    capacities,
    compress,
    error_bound,
    generalization_bound,
    load_dataset,
    load_model,
    margins,
    mc_error,
    normalized_margins,
    path_complexity,
    path_norm,
    reference_inputs,
    reference_network,
    sample_paths,
    save_model,
    sweep,
    variation,
    variation_bounds,
    verify,
)

__all__ = [
    "Network",
    "PathSampleError",
    "capacities",
    "compress",
    "error_bound",
    "generalization_bound",
    "load_dataset",
    "load_model",
    "margins",
    "mc_error",
    "normalized_margins",
    "path_complexity",
    "path_norm",
    "reference_inputs",
    "reference_network",
    "sample_paths",
    "save_model",
    "sweep",
    "variation",
    "variation_bounds",
    "verify",
]
