"""Constructive joint universality for Dirichlet series with Euler products."""

from .assignment import UnimodularAssignment
from .exceptions import UniversalityError
from .primes import PrimeBand, prime_count, sieve_range
from .series import (
    CoefficientSource,
    Estimate,
    OrderEstimator,
    StandardTypeSeries,
    estimate_order,
    estimate_orthogonality,
    evaluate_dirichlet,
    twisted_prime_sum,
)
from .targets import CompactDomain, LaplaceTarget, LaplaceTargetRegressor, discretize, fit_target
from .steering import (
    SteeringProblem,
    UniversalitySteerer,
    choose_base_phases,
    correction_step,
    steer_block,
    steer_constants,
    steer_function,
    unimodular_round,
)
from .shifts import density_estimate, find_shift, shift_predicate
from .analytic import (
    combo_nullspace,
    linear_combination_eval,
    plan_theorem1,
    verify_hybrid,
    winding_number,
    zero_hunt,
)

__version__ = "0.1.0"
