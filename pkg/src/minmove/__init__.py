"""Minimizing movements for wiggly energies: pinning thresholds, homogenized
velocities and the limit equation x' = -gamma f_gamma(h'(x))."""
from .dynamics import (
    LinearizedOrbit,
    MMConfig,
    SandwichResult,
    Trajectory,
    escape_index,
    run_linearized,
    run_mm,
    sandwich_check,
    sandwich_details,
)
from .errors import (
    BudgetExceeded,
    HypothesisViolated,
    InvalidInput,
    MinMoveError,
    MonotonicityViolation,
    NonCoercive,
    NotFound,
    Pinned,
    QuadratureSingularity,
    WellEscape,
)
from .homogenization import (
    ExtremeLimits,
    PeriodicOrbitReport,
    PinningReport,
    VelocityCache,
    VelocityEstimate,
    default_cache,
    detect_periodic_orbit,
    extreme_limits,
    homogenized_velocity,
    pinning_threshold,
    pinning_threshold_criterion,
    pinning_threshold_velocity,
)
from .limit_ode import OdeRun, convergence_study, integrate_limit
from .potentials import (
    ConvexDrive,
    LinearDrive,
    OscillatingEnergy,
    PeriodicPotential,
    load_drive,
    load_potential,
    make_cosine_potential,
    make_polynomial_drive,
    make_pwq_potential,
    make_quadratic_drive,
    make_tabulated_potential,
    make_zero_potential,
    validate_drive,
    validate_potential,
)
from .proximal import ProxProblem, ProxResult, full_problem, linearized_problem, prox_step

__version__ = "0.1.0"
