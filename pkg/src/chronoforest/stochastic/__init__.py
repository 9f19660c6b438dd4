"""Random stick laws, renewal samplers, coupling and scaling experiments."""

from .laws import (
    AGE_MAPS,
    ConstantStickLaw,
    ExponentialUniformLaw,
    GaltonWatsonUnitLaw,
    GeometricUniformLaw,
    StableFamilyLaw,
    StickBatch,
    StickLaw,
    TwoPointAgesLaw,
    example_family,
    parse_law,
    random_verification_law,
)
from .renewal import (
    LadderPair,
    LadderStats,
    ladder_trio_pmf,
    mean_age_integral_mc,
    sample_covering_v,
    sample_ladder_pair,
    sample_ladder_stats,
    sample_vhat,
    sample_ystars,
    tau_minus_pmf,
)
from .coupling import CouplingResult, run_coupling, run_coupling_many, summarize_coupling
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    max_rise_in_window,
    parse_config,
    resolve_scale,
    scaling_experiment,
    simulate_contour,
    simulate_replicate,
    verify_time_change_gap,
)

__all__ = [
    "AGE_MAPS",
    "ConstantStickLaw",
    "ExponentialUniformLaw",
    "GaltonWatsonUnitLaw",
    "GeometricUniformLaw",
    "StableFamilyLaw",
    "StickBatch",
    "StickLaw",
    "TwoPointAgesLaw",
    "example_family",
    "parse_law",
    "random_verification_law",
    "LadderPair",
    "LadderStats",
    "ladder_trio_pmf",
    "mean_age_integral_mc",
    "sample_covering_v",
    "sample_ladder_pair",
    "sample_ladder_stats",
    "sample_vhat",
    "sample_ystars",
    "tau_minus_pmf",
    "CouplingResult",
    "run_coupling",
    "run_coupling_many",
    "summarize_coupling",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ExperimentResult",
    "max_rise_in_window",
    "parse_config",
    "resolve_scale",
    "scaling_experiment",
    "simulate_contour",
    "simulate_replicate",
    "verify_time_change_gap",
]
