"""Relevance-weighted task-parameterised Gaussian mixture regression.

Trajectory learning from demonstration with per-frame local models, plus
a per-step frame weighting that measures, at every time step, which task
frame the demonstrations actually agree in, and lets that frame dominate
the fused model. Includes the unweighted baseline, a data-driven search
for the weight exponent, and the evaluation protocols used to compare
the two.
"""

from .gaussian import (
    Gaussian,
    GaussianError,
    condition,
    det_power,
    log_det,
    product,
    regularize,
    scale_cov,
    transform,
)
from .tpmodel import (
    Dataset,
    Demonstration,
    EmConfig,
    ModelError,
    TaskFrame,
    TPGMM,
    Trajectory,
    fit_em,
    global_components,
    gmr,
    project,
    reproduce,
    resample,
)
from .relevance import (
    RelevanceProfile,
    StepGaussians,
    default_window,
    fit_step_gaussians,
    frame_weights,
    reproduce_weighted,
    smooth,
)
from .optimize import (
    AlphaSearchConfig,
    AlphaSearchResult,
    LossConfig,
    OptimizeError,
    golden_section,
    optimize_alpha,
    weighted_loss,
)
from .evalx import (
    ConstraintBoxes,
    GridSpec,
    LooConfig,
    ModelBundle,
    TrajMetrics,
    constraint_error,
    critical_point_errors,
    endpoint_errors,
    evaluate_trajectory,
    fit_constraint_boxes,
    grid_eval,
    loo_cross_validate,
    path_length,
    rmse,
)
from .dataio import (
    DataError,
    ModelArtifact,
    TraySpec,
    export_csv,
    gen_pickplace,
    gen_reaching,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "Gaussian",
    "GaussianError",
    "condition",
    "det_power",
    "log_det",
    "product",
    "regularize",
    "scale_cov",
    "transform",
    "Dataset",
    "Demonstration",
    "EmConfig",
    "ModelError",
    "TaskFrame",
    "TPGMM",
    "Trajectory",
    "fit_em",
    "global_components",
    "gmr",
    "project",
    "reproduce",
    "resample",
    "RelevanceProfile",
    "StepGaussians",
    "default_window",
    "fit_step_gaussians",
    "frame_weights",
    "reproduce_weighted",
    "smooth",
    "AlphaSearchConfig",
    "AlphaSearchResult",
    "LossConfig",
    "OptimizeError",
    "golden_section",
    "optimize_alpha",
    "weighted_loss",
    "ConstraintBoxes",
    "GridSpec",
    "LooConfig",
    "ModelBundle",
    "TrajMetrics",
    "constraint_error",
    "critical_point_errors",
    "endpoint_errors",
    "evaluate_trajectory",
    "fit_constraint_boxes",
    "grid_eval",
    "loo_cross_validate",
    "path_length",
    "rmse",
    "DataError",
    "ModelArtifact",
    "TraySpec",
    "export_csv",
    "gen_pickplace",
    "gen_reaching",
    "load_dataset",
    "load_model",
    "save_dataset",
    "save_model",
    "__version__",
]
