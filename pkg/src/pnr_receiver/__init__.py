"""Minimum-error discrimination of binary coherent states with a displaced PNR receiver."""

__version__ = "0.1.0"

from .baselines import helstrom_bound, homodyne_limit
from .decision import decision_table, error_probability, map_decide
from .model import (
    EXPERIMENT,
    IDEAL,
    AfterpulseMode,
    Alphabet,
    AlphabetKind,
    CountDistribution,
    Hypothesis,
    NoiseModel,
    ParameterError,
    PnrResolution,
    Priors,
    ReceiverConfig,
    state_mean_photons,
)
from .optimize import OptimizationResult, beta_curve, landscape, optimize_displacement
from .photostats import count_distribution
from .simulate import ErrorEstimate, RunPlan, run_experiment, run_trials, sample_counts

__all__ = [
    "AfterpulseMode", "Alphabet", "AlphabetKind", "CountDistribution", "EXPERIMENT", "ErrorEstimate",
    "Hypothesis", "IDEAL", "NoiseModel", "OptimizationResult", "ParameterError", "PnrResolution",
    "Priors", "ReceiverConfig", "RunPlan", "beta_curve", "count_distribution", "decision_table",
    "error_probability", "helstrom_bound", "homodyne_limit", "landscape", "map_decide",
    "optimize_displacement", "run_experiment", "run_trials", "sample_counts", "state_mean_photons",
]
