import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import zeta
from universality.analytic import (
    _hunt,
    combo_nullspace,
    constant_floor,
    dirichlet_function,
    linear_combination_eval,
    plan_theorem1,
    verify_hybrid,
    winding_number,
    write_tiles_csv,
    zero_hunt,
)
from universality.assignment import UnimodularAssignment
from universality.exceptions import ContourZeroError, DegenerateMultiplierError
from universality.primes import sieve_range
from universality.series import CoefficientSource, StandardTypeSeries
from universality.steering import SteeringProblem, steer_function
from universality.targets import CompactDomain, LaplaceTarget

Z = CoefficientSource.zeta()
K = CompactDomain.rectangle(0.3, 0.7, -0.2, 0.2, 0.1)


def _log_zeta_targets(problem, t):
    return np.array([[complex(mpmath.log(mpmath.zeta(z + 1j * t))) for z in problem.grid]])


# ---- verification

def test_verify_t_mode_against_mpmath():
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.0)], K, delta=0.5, eps=0.05, prime_limit=10**6)
    rep = verify_hybrid(pr, t=10.0, target_values=_log_zeta_targets(pr, 10.0))
    assert rep.mode == "t"
    assert rep.passed
    assert rep.sup_error < 5e-3


def test_verify_t_mode_detects_wrong_target():
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.0)], K, delta=0.5, eps=0.05, prime_limit=10**5)
    rep = verify_hybrid(pr, t=10.0, target_values=_log_zeta_targets(pr, 10.0) + 0.1)
    assert not rep.passed
    assert rep.sup_error == pytest.approx(0.1, abs=0.02)


def test_verify_t_mode_pins():
    t = 3.0
    pins = {2: cmath.exp(1j * t * math.log(2))}
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.0)], K, delta=0.5, eps=0.05,
                         pins=pins, prime_limit=10**5)
    rep = verify_hybrid(pr, t=t, target_values=_log_zeta_targets(pr, t))
    assert rep.pin_deviation < 1e-12


def test_verify_omega_mode_after_steering():
    Kd = CompactDomain.rectangle(0.3, 0.7, -0.2, 0.2, 0.05)
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.2 - 0.1j)], Kd, delta=0.0933, eps=0.05,
                         M=3, prime_limit=2 * 10**6)
    rep = steer_function(pr)
    ver = verify_hybrid(pr, rep.omega)
    assert ver.mode == "omega" and ver.passed
    assert ver.sup_error == pytest.approx(rep.error, abs=1e-9)
    assert ver.ledger["value_error"]["within"]


def test_verify_transfer_items():
    t, N1 = 7.0, 1000
    small = sieve_range(2, N1)
    pins = {int(p): complex(np.exp(-1j * t * math.log(p))) for p in small}
    omega = UnimodularAssignment.from_mapping(pins, default_rule="random", seed=0)
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.0)], K, delta=0.5, eps=0.05, prime_limit=10**4)
    rep = verify_hybrid(pr, omega, t, target_values=np.zeros((1, K.points.size)), N1=N1)
    assert rep.ledger["eps2"]["value"] < 1e-12
    assert rep.ledger["tra2"]["value"] < 1e-9
    assert rep.ledger["tra2"]["gating"]


def test_verify_needs_input():
    pr = SteeringProblem([Z], [LaplaceTarget.constant(0.0)], K, delta=0.5, eps=0.05)
    with pytest.raises(ValueError):
        verify_hybrid(pr)


# ---- reduction planning

def test_plan_multiplier_scan():
    ser = StandardTypeSeries(Z, multiplier=(1.0,))
    g = LaplaceTarget.flat(0.01, 0.0, 1.0)
    plan = plan_theorem1([ser], [g], K, 0.05)
    assert plan.t0 == pytest.approx(0.0, abs=1e-9)
    assert plan.xi_prime == pytest.approx(1.5)


def test_plan_degenerate_multiplier():
    ser = StandardTypeSeries(Z, multiplier=(-2.0,))
    with pytest.raises(DegenerateMultiplierError):
        plan_theorem1([ser], [LaplaceTarget.flat(0.01, 0.0, 1.0)], K, 0.05, t_window=(0.0, 0.0),
                      scan_points=1)


def test_plan_floor_scales_linearly():
    assert constant_floor(2.0, 1) == pytest.approx(2 * constant_floor(1.0, 1))
    assert constant_floor(1.0, 2) == pytest.approx(8 * 2**1.5)
    g1 = LaplaceTarget.flat(0.01, 0.0, 1.0)
    g2 = LaplaceTarget.flat(0.02, 0.0, 1.0)
    p1 = plan_theorem1([Z], [g1], K, 0.05)
    p2 = plan_theorem1([Z], [g2], K, 0.05)
    assert p2.floors[0] == pytest.approx(2 * p1.floors[0])


def test_plan_checks_and_offsets():
    ser = StandardTypeSeries(Z, multiplier=(0.5,), additive=(0.1, 0.2))
    plan = plan_theorem1([ser], [LaplaceTarget.flat(0.01, 0.0, 1.0)], K, 0.05)
    s0 = 1 + 1j * plan.t0
    assert plan.offsets[0] == pytest.approx(-(0.1 + 0.2 * 2 ** (-s0)))
    assert all(c["within"] for c in plan.checks["ab11"])
    assert all(plan.checks["floor_met"])
    assert all(plan.checks["modulus_5_4"])
    assert all(plan.checks["th3_admissible"])
    assert 0 < plan.delta0 <= 1


# ---- linear combinations

def test_nullspace_examples():
    b = combo_nullspace([1, 1])
    assert np.allclose(b, [1, -1])
    b = combo_nullspace([1, 2, 3])
    assert abs(np.dot(b, [1, 2, 3])) < 1e-15
    assert np.max(np.abs(b)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        combo_nullspace([1])
    with pytest.raises(ValueError):
        combo_nullspace([1, 0])


def test_nullspace_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = rng.integers(2, 8)
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        b = combo_nullspace(a)
        assert abs(np.dot(b, a)) < 1e-12
        assert np.max(np.abs(b)) == pytest.approx(1.0)


def test_combination_single_term():
    est = linear_combination_eval([2.0], [Z], 2.0, cutoff=10**4)
    assert est.contains(2 * math.pi**2 / 6)


def test_combination_cancellation():
    est = linear_combination_eval([1.0, -1.0], [Z, Z], 1.5 + 3j, cutoff=10**4)
    assert abs(est.value) < 1e-12


def test_combination_shifted_pair():
    s = 1.5
    est = linear_combination_eval([1.0, 1.0], [Z, CoefficientSource.shifted_zeta(5.0)], s, cutoff=10**5,
                                  tail="integral")
    ref = zeta(s) + zeta(s + 5j)
    assert abs(est.value - ref) <= est.error + 1e-9
    assert est.error < 0.05


def test_truncated_function_matches_mpmath():
    fn = dirichlet_function([1.0, 1.0], [Z, CoefficientSource.shifted_zeta(5.0)], cutoff=2000)
    for s in (1.2 + 3j, 1.05 + 40j):
        ref = zeta(s) + zeta(s + 5j)
        assert abs(fn(s) - ref) <= fn.error_bound(s)


# ---- argument principle

@pytest.mark.parametrize("zeros,expected", [
    ((0.5 + 0.5j,), 1),
    ((0.5 + 0.5j, 0.2 + 0.7j), 2),
    ((2.0 + 2j,), 0),
])
def test_winding_polynomial(zeros, expected):
    fn = lambda s: np.prod([s - z for z in zeros], axis=0)  # noqa: E731
    res = winding_number(fn, (0.0, 1.0, 0.0, 1.0))
    assert res.winding == expected
    assert res.residual < 1e-3


def test_winding_zero_on_contour():
    with pytest.raises(ContourZeroError):
        winding_number(lambda s: s - 0.5, (0.0, 1.0, 0.0, 1.0))


@given(st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_winding_stable_under_refinement(x, y):
    fn = lambda s: (s - complex(x, y)) * np.exp(s)  # noqa: E731
    a = winding_number(fn, (0.0, 1.0, 0.0, 1.0), n0=32)
    b = winding_number(fn, (0.0, 1.0, 0.0, 1.0), n0=128)
    assert a.winding == b.winding == 1


# ---- zero hunt

def test_hunt_precondition():
    with pytest.raises(ValueError):
        zero_hunt([1.0, 0.0], [Z, Z], t_budget=10)


def test_hunt_identically_zero():
    with pytest.raises(ContourZeroError):
        _hunt(lambda s: np.zeros_like(s), 1.0, 1.1, 0.0, 5.0, 0.05)


def test_hunt_planted_zeros():
    zs = (1.04 + 3.21j, 1.07 + 7.9j)
    fn = lambda s: (s - zs[0]) * (s - zs[1])  # noqa: E731
    hits, cand, cells = _hunt(fn, 1.005, 1.1, 0.0, 10.0, 0.05)
    assert len(hits) == 2
    for z, tile in zip(zs, hits):
        assert tile.re_lo <= z.real <= tile.re_hi and tile.im_lo <= z.imag <= tile.im_hi
        assert tile.winding == 1
    assert cand >= 2 and cells > cand


def test_hunt_short_strip_deterministic(tmp_path):
    a = zero_hunt([1.0, 1.0], [Z, CoefficientSource.shifted_zeta(5.0)], 0.1, 100.0)
    b = zero_hunt([1.0, 1.0], [Z, CoefficientSource.shifted_zeta(5.0)], 0.1, 100.0)
    assert a.as_dict() == b.as_dict()
    assert a.exhausted == (not a.hits)
    write_tiles_csv(a, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("re_lo,re_hi,im_lo,im_hi,winding,residual")
