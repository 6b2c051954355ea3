"""Stochastic delayed nonlocal-diffusion model of dynamic life tables.

The pipeline: load a life table, build the graduation kernel and the
delay profile from the fit years, simulate a seeded ensemble of death
probability paths, then score it (validation indicators) and certify it
(equilibrium and mean-square bound analysis).
"""

from .delay import (
    DelayProfile,
    ImprovementRateTable,
    SphericConfig,
    build_profile,
    build_rate_table,
    discretized_exponential,
    fit_beta,
    global_improvement_rate,
    global_rate_by_delay,
    spheric_weight,
)
from .equilibrium import (
    EquilibriumReport,
    analyze,
    check_conditions,
    compute_M1,
    compute_delta,
    empirical_time_average,
    find_lambda_star,
    solve_fixed_point,
    theoretical_bound,
)
from .errors import ComputationError, InputError, MortsdeError
from .indicators import (
    IndicatorReport,
    build_report,
    central_indicator,
    count_indicator,
    empirical_ci,
    ensemble_stats,
    error_indicators,
)
from .kernel import KernelConfig, KernelWeights, build_kernel, convolve, gaussian_density
from .lifetable import (
    BoundaryRule,
    LifeTable,
    PeriodSplit,
    exterior_rate,
    load_life_table,
    split_periods,
    write_life_table,
)
from .runconfig import RunConfig, load_run_config
from .simulate import (
    EnsembleForecast,
    NoiseSpec,
    SimConfig,
    Trajectory,
    box_muller_pair,
    derive_seed,
    drift,
    em_step,
    gaussian_increments,
    simulate_ensemble,
    simulate_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryRule",
    "ComputationError",
    "DelayProfile",
    "EnsembleForecast",
    "EquilibriumReport",
    "ImprovementRateTable",
    "IndicatorReport",
    "InputError",
    "KernelConfig",
    "KernelWeights",
    "LifeTable",
    "MortsdeError",
    "NoiseSpec",
    "PeriodSplit",
    "RunConfig",
    "SimConfig",
    "SphericConfig",
    "Trajectory",
    "analyze",
    "box_muller_pair",
    "build_kernel",
    "build_profile",
    "build_rate_table",
    "build_report",
    "central_indicator",
    "check_conditions",
    "compute_M1",
    "compute_delta",
    "convolve",
    "count_indicator",
    "derive_seed",
    "discretized_exponential",
    "drift",
    "em_step",
    "empirical_ci",
    "empirical_time_average",
    "ensemble_stats",
    "error_indicators",
    "exterior_rate",
    "find_lambda_star",
    "fit_beta",
    "gaussian_density",
    "gaussian_increments",
    "global_improvement_rate",
    "global_rate_by_delay",
    "load_life_table",
    "load_run_config",
    "simulate_ensemble",
    "simulate_trajectory",
    "solve_fixed_point",
    "spheric_weight",
    "split_periods",
    "theoretical_bound",
    "write_life_table",
]
