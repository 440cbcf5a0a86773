"""Simulation and analytics for point processes with rapidly fluctuating rates.

The package simulates Markov-modulated, periodic and thinned arrival streams
whose intensity fluctuates on a fast time scale eps, computes the matching
constant-rate Poisson approximation together with its first-order
eps-corrections for arrival counts and infinite-server occupancy, evaluates
the limiting path total-variation distance between the fluctuating stream
and its constant-rate approximation, and validates every expansion with a
deterministic Monte Carlo harness.
"""

from .arrivals import (
    ArrivalStream,
    BaseProcessSpec,
    CoxBase,
    PeriodicIntensity,
    PoissonBase,
    RenewalGammaBase,
    sample_cox_counts,
    sample_periodic_counts,
    sample_thinned_counts,
    simulate_base,
    simulate_constant_poisson,
    simulate_cox,
    simulate_periodic,
    thin_and_speed,
)
from .errors import (
    ConfigError,
    DegenerateMeanError,
    EnumerationTooLargeError,
    GeneratorValidationError,
    LengthMismatchError,
    NegativeOffDiagonalError,
    NonSquareError,
    QuadratureError,
    RapidppError,
    ReducibleError,
    RowSumError,
    SingularSystemError,
    ZeroMeanRateError,
)
from .expansions import (
    ErlangService,
    ExpansionInputs,
    ExponentialService,
    PmfVector,
    ServiceModel,
    UniformService,
    corrected_count_pmf,
    corrected_count_pmf_periodic,
    corrected_queue_pmf,
    default_kmax,
    eta_squared,
    eta_squared_exponential,
    hk_derivatives,
    mean_q0,
    periodic_correction_integral,
    poisson_pmf,
    tv_limit_exact,
    tv_limit_mc,
)
from .harness import (
    ExperimentSpec,
    GofResult,
    PmfEstimate,
    ResidualEntry,
    ResidualReport,
    chi_square_gof,
    chi_square_two_sample,
    construction_equivalence_test,
    convergence_study,
    estimate_pmf,
    marginal_tv_distance,
)
from .markov_env import (
    CtmcModel,
    EnvironmentPath,
    GeneratorMatrix,
    StationaryAnalysis,
    analyze,
    occupation_integral,
    sample_occupation_integrals,
    sample_path,
    stationary_distribution,
    validate_generator,
)
from .queue_sim import (
    QueueObservation,
    number_in_system,
    sample_queue_counts,
    sample_service,
    simulate_queue_at_t,
)

__version__ = "0.1.0"
