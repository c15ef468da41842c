"""Bose-Einstein household income distribution toolkit.

Closed-form population/income results, census bracket ingestion,
Levenberg-Marquardt fitting of the Bose-Einstein and gamma density
families, and a kinetic Monte Carlo check of the stationary
distribution.
"""

from .fit import (
    DegenerateDataError,
    FitOptions,
    FitResult,
    SingularJacobianError,
    UndefinedRSquaredError,
    YearEntry,
    YearSeries,
    fit,
    fit_histogram,
    fit_report,
    fit_years,
    initial_guess,
    r_squared,
    series_table,
)
from .ingest import (
    DensityPoint,
    DensitySample,
    IncomeBin,
    IncomeHistogram,
    ParseError,
    TopBinPolicy,
    ValidationError,
    normalize,
    parse_file,
    parse_table,
    representative,
    serialize,
)
from .kinetics import (
    IncomeLevel,
    RatePair,
    SimulationResult,
    Society,
    bose_rate_pairs,
    equilibrium_density,
    log_partition_function,
    mean_occupation,
    partition_function,
    raise_coefficient,
    simulate,
    simulate_ensemble,
    simulation_report,
)
from .model import (
    ModelKind,
    ModelParams,
    bin_mass,
    beta_for_population,
    density,
    density_gradient,
    total_income,
    total_population,
)
from .special import (
    Accuracy,
    DEFAULT_ACCURACY,
    DomainError,
    NonConvergenceError,
    bose_integral,
    bose_tail_cutoff,
    gamma,
    integrate,
    zeta,
)
from .synth import expected_histogram, synthesize

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "DegenerateDataError",
    "DensityPoint",
    "DensitySample",
    "DomainError",
    "FitOptions",
    "FitResult",
    "IncomeBin",
    "IncomeHistogram",
    "IncomeLevel",
    "ModelKind",
    "ModelParams",
    "NonConvergenceError",
    "ParseError",
    "RatePair",
    "SimulationResult",
    "SingularJacobianError",
    "Society",
    "TopBinPolicy",
    "UndefinedRSquaredError",
    "ValidationError",
    "YearEntry",
    "YearSeries",
    "beta_for_population",
    "bin_mass",
    "bose_integral",
    "bose_rate_pairs",
    "bose_tail_cutoff",
    "density",
    "density_gradient",
    "equilibrium_density",
    "expected_histogram",
    "fit",
    "fit_histogram",
    "fit_report",
    "fit_years",
    "gamma",
    "initial_guess",
    "integrate",
    "log_partition_function",
    "mean_occupation",
    "normalize",
    "parse_file",
    "parse_table",
    "partition_function",
    "r_squared",
    "raise_coefficient",
    "representative",
    "serialize",
    "series_table",
    "simulate",
    "simulate_ensemble",
    "simulation_report",
    "synthesize",
    "total_income",
    "total_population",
    "zeta",
]

__version__ = "0.1.0"
