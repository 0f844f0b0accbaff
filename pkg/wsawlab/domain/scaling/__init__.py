"""Rescaled paths, the path lift and scaling-limit statistics."""

from wsawlab.domain.scaling.experiments import (
    DegenerateTable,
    DiluteRatioRow,
    DiluteRatioTable,
    build_dilute_table,
    degenerate_regime_check,
    dilute_ratio_experiment,
    estimate_diffusion,
    fdd_experiment,
    regime_side,
    tightness_experiment,
)
from wsawlab.domain.scaling.paths import (
    RescaledPath,
    lift_path,
    lift_with_stopping_times,
    project_path,
    rescale,
    unit_rep,
)
from wsawlab.domain.scaling.statistics import (
    DiffusionFit,
    IncrementSpec,
    diffusion_fit,
    fdd_statistic,
    gaussian_reference,
    random_walk_characteristic,
    standard_frequency_grid,
    tightness_check,
)

__all__ = [
    "DegenerateTable",
    "DiffusionFit",
    "DiluteRatioRow",
    "DiluteRatioTable",
    "IncrementSpec",
    "RescaledPath",
    "build_dilute_table",
    "degenerate_regime_check",
    "diffusion_fit",
    "dilute_ratio_experiment",
    "estimate_diffusion",
    "fdd_experiment",
    "fdd_statistic",
    "gaussian_reference",
    "lift_path",
    "lift_with_stopping_times",
    "project_path",
    "random_walk_characteristic",
    "regime_side",
    "rescale",
    "standard_frequency_grid",
    "tightness_check",
    "tightness_experiment",
    "unit_rep",
]
