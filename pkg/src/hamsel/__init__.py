"""Minimax support selection under Hamming loss.

Selectors and exact risk formulas for the sparse Gaussian sequence model
and its Bernoulli/Poisson analogues, phase-boundary signal levels, and a
deterministic seeded Monte Carlo harness.
"""

from .model import (
    CrowdInstance,
    DataFormatError,
    Family,
    Interval,
    LossKind,
    LowerBound,
    ProblemInstance,
    RiskReport,
    SupportVector,
    TwoSided,
    hamming_distance,
    least_favorable_draw,
    rng_stream,
    uniform_support,
)
from .numkit import (
    arccosh,
    arccosh_exp,
    gaussian_cdf,
    gaussian_tail_bounds,
    log_gaussian_tail,
    poisson_cdf,
)
from .risk import (
    PhasePoint,
    RecoveryBounds,
    WrongRecoveryBounds,
    a0_adaptive,
    adaptive_A_min,
    delta_bounds,
    phase_point,
    psi_bar,
    psi_crowd,
    psi_general,
    psi_plus,
    psi_two_sided,
    wrong_recovery_bounds,
)
from .selectors import (
    AdaptiveResult,
    adaptive_selector,
    cosh_selector,
    cosh_threshold,
    crowd_selector,
    llr_selector,
    llr_threshold,
    minimax_threshold,
    spec_for_kind,
    threshold_one_sided,
    threshold_two_sided,
    top_s_selector,
    universal_selector,
    universal_threshold,
)
from .simulate import (
    BayesFloorResult,
    MCConfig,
    apply_selector,
    bayes_floor_check,
    estimate_risk,
    generate_family,
    generate_gaussian,
    phase_sweep,
    psi_bar_printed_mc,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveResult",
    "BayesFloorResult",
    "CrowdInstance",
    "DataFormatError",
    "Family",
    "Interval",
    "LossKind",
    "LowerBound",
    "MCConfig",
    "PhasePoint",
    "ProblemInstance",
    "RecoveryBounds",
    "RiskReport",
    "SupportVector",
    "TwoSided",
    "WrongRecoveryBounds",
    "a0_adaptive",
    "adaptive_A_min",
    "adaptive_selector",
    "apply_selector",
    "arccosh",
    "arccosh_exp",
    "bayes_floor_check",
    "cosh_selector",
    "cosh_threshold",
    "crowd_selector",
    "delta_bounds",
    "estimate_risk",
    "gaussian_cdf",
    "gaussian_tail_bounds",
    "generate_family",
    "generate_gaussian",
    "hamming_distance",
    "least_favorable_draw",
    "llr_selector",
    "llr_threshold",
    "log_gaussian_tail",
    "minimax_threshold",
    "phase_point",
    "phase_sweep",
    "poisson_cdf",
    "psi_bar",
    "psi_bar_printed_mc",
    "psi_crowd",
    "psi_general",
    "psi_plus",
    "psi_two_sided",
    "rng_stream",
    "spec_for_kind",
    "threshold_one_sided",
    "threshold_two_sided",
    "top_s_selector",
    "uniform_support",
    "universal_selector",
    "universal_threshold",
    "wrong_recovery_bounds",
]
