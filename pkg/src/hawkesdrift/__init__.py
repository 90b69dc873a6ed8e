"""Diffusions with Hawkes-driven jumps: simulation and adaptive drift estimation."""

__version__ = "0.1.0"

from .basis import TrigBasis
from .bench import ExperimentConfig, RiskTable, default_grid, run_cell, run_table
from .estimator import (
    DriftEstimate,
    FitResult,
    RegressionSamples,
    build_samples,
    empirical_risk,
    fit,
    penalty,
    select,
)
from .hawkes import (
    EventLog,
    HawkesParams,
    compensator,
    expected_rate,
    intensity_at,
    simulate,
    time_rescaling_residuals,
    validate,
)
from .sde import (
    ExplosionError,
    ModelSpec,
    SamplePath,
    SimConfig,
    builtin_models,
    get_model,
    simulate_path,
)
