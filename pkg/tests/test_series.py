import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from oracles import eratosthenes, log_zeta_euler_tail, prime_power_sum, zeta
from universality.assignment import UnimodularAssignment
from universality.exceptions import (
    CoefficientFileError,
    DivergenceError,
    MissingCoefficientError,
    VanishingLocalFactorError,
)
from universality.primes import sieve_range
from universality.series import (
    CoefficientSource,
    OrderEstimator,
    StandardTypeSeries,
    coefficient,
    estimate_order,
    estimate_orthogonality,
    euler_tail_log,
    evaluate_dirichlet,
    log_evaluate_euler,
    power_prime_sum,
    prime_grid_sums,
    quadratic_character,
    twisted_prime_sum,
)

ZETA = CoefficientSource.zeta()
CHI4 = CoefficientSource.character(4, [0, 1, 0, -1])


# ---- coefficients

def test_coefficient_examples():
    assert coefficient(ZETA, 7, 3) == 1
    assert coefficient(CoefficientSource.shifted_zeta(1.0), 2, 1) == pytest.approx(cmath.exp(-1j * math.log(2)))
    assert coefficient(CHI4, 3, 1) == -1


def test_quadratic_character_matches_table():
    chi = quadratic_character(-4)
    p = sieve_range(2, 1000)
    assert np.allclose(chi.prime_values(p), CHI4.prime_values(p))


def test_character_table_validation():
    with pytest.raises(ValueError):
        CoefficientSource.character(4, [0, 1, 0])


def test_file_source(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# p k re im\n2 1 0.5 0\n3 1 0 -0.5\n3 2 0.25 0\n")
    src = CoefficientSource.from_file(path)
    assert coefficient(src, 3, 1) == -0.5j
    assert coefficient(src, 3, 2) == 0.25
    with pytest.raises(MissingCoefficientError):
        src.prime_values(np.array([5]))


@pytest.mark.parametrize("text,line", [
    ("2 1 0.5 0\n2 1 0.1 0\n", 2),
    ("2 1 0.5\n", 1),
    ("2 1 x 0\n", 1),
    ("2 1 3.0 0\n", 1),
])
def test_file_source_errors(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(CoefficientFileError) as info:
        CoefficientSource.from_file(path)
    assert info.value.line == line


def test_file_source_rejects_composites(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1 0.5 0\n4 1 0.5 0\n")
    with pytest.raises(CoefficientFileError):
        CoefficientSource.from_file(path)


# ---- evaluation

def test_zeta_two():
    est = evaluate_dirichlet(StandardTypeSeries(ZETA), 2.0, 10**6)
    assert est.contains(math.pi**2 / 6)
    assert abs(est.value - 1.644934) < 1e-5


def test_constant_series_is_one():
    est = evaluate_dirichlet(StandardTypeSeries(CoefficientSource.zero()), 3.0 + 1j, 1000)
    assert est.value == 1
    assert est.error < 1e-12


def test_zeta_three_halves_against_oracle():
    est = evaluate_dirichlet(StandardTypeSeries(ZETA), 1.5, 10**5)
    assert est.contains(zeta(1.5))


@pytest.mark.parametrize("s", [1.5 + 1j, 2 - 3j, 1.2 + 10j])
def test_shifted_zeta_against_mpmath(s):
    est = evaluate_dirichlet(StandardTypeSeries(CoefficientSource.shifted_zeta(2.0)), s, 10**5)
    assert est.contains(zeta(s + 2j))


def test_character_against_catalan():
    est = evaluate_dirichlet(StandardTypeSeries(CHI4), 2.0, 10**5)
    assert est.contains(0.915965594177219)


def test_divergence_guard():
    with pytest.raises(DivergenceError):
        evaluate_dirichlet(StandardTypeSeries(ZETA), 1.0, 1000)
    with pytest.raises(ValueError):
        evaluate_dirichlet(StandardTypeSeries(ZETA), 1.01, 1000)


def test_multiplier_and_additive_parts():
    ser = StandardTypeSeries(ZETA, multiplier=(0.5,), additive=(0.25, 0.0, 1.0))
    s = 2.5 + 1j
    est = evaluate_dirichlet(ser, s, 10**5)
    expected = (1 + 0.5 * 2**-s) * zeta(s) + 0.25 + 3**-s
    assert est.contains(expected)


def test_log_euler_zeta_two():
    est = log_evaluate_euler(ZETA, 2.0, 10**6)
    assert est.contains(math.log(math.pi**2 / 6))


def test_log_euler_empty():
    assert log_evaluate_euler(ZETA, 2.0, 1).value == 0


def test_log_euler_conjugation():
    a = log_evaluate_euler(CoefficientSource.shifted_zeta(1.0), 2.0, 10**5).value
    b = log_evaluate_euler(CoefficientSource.shifted_zeta(-1.0), 2.0, 10**5).value
    assert a == pytest.approx(b.conjugate(), abs=1e-13)


@pytest.mark.parametrize("s", [1.5, 2.0, 2 + 3j])
def test_euler_identity(s):
    lg = log_evaluate_euler(ZETA, s, 10**6)
    dr = evaluate_dirichlet(StandardTypeSeries(ZETA), s, 10**6)
    val = cmath.exp(lg.value)
    bound = abs(val) * math.expm1(lg.error) + dr.error
    assert abs(val - dr.value) <= bound


def test_prime_zeta_two():
    v = twisted_prime_sum(ZETA, UnimodularAssignment.constant_one(), 2.0, 2, 10**6)
    assert v == pytest.approx(prime_power_sum(2.0, 2, 10**6), abs=1e-13)
    assert abs(v - 0.4522474200410654) < 1e-6


def test_twisted_sum_empty_and_negated():
    assert twisted_prime_sum(ZETA, None, 2.0, 100, 100) == 0
    p = sieve_range(2, 10**4)
    minus = UnimodularAssignment.from_mapping({int(q): -1 for q in p})
    a = twisted_prime_sum(ZETA, None, 2.0, 2, 10**4)
    b = twisted_prime_sum(ZETA, minus, 2.0, 2, 10**4)
    assert b == pytest.approx(-a, abs=1e-14)


@given(st.integers(0, 2**32), st.floats(1.1, 3.0), st.floats(-5, 5))
def test_conjugation_symmetry(seed, sigma, tau):
    p = sieve_range(2, 5000)
    om = UnimodularAssignment.constant_one().with_pins(p, UnimodularAssignment.random(seed).values(p))
    s = complex(sigma, tau)
    a = twisted_prime_sum(ZETA, om, s, 2, 5000)
    b = twisted_prime_sum(ZETA, om.conjugate(), s.conjugate(), 2, 5000)
    assert b == pytest.approx(a.conjugate(), abs=1e-12)


def test_euler_tail_log_at_one():
    est = euler_tail_log(ZETA, UnimodularAssignment.constant_one(), 1.0, 10**7)
    assert est.value.real == pytest.approx(log_zeta_euler_tail(2, 10**7 + 1), abs=1e-12)
    assert abs(est.value - (-0.3157)) < 1e-3
    assert est.contains(-0.31571845205389)


def test_euler_tail_zero_source():
    assert euler_tail_log(CoefficientSource.zero(), None, 1.0, 10**4).value == 0


def test_euler_tail_composition():
    s = 2.0
    cut = 10**6
    tail = euler_tail_log(ZETA, None, s, cut)
    lg = log_evaluate_euler(ZETA, s, cut)
    P2 = twisted_prime_sum(ZETA, None, s, 2, cut + 1)
    # log F = z - defect, so exp(log E) * prod F = exp(P(2))
    assert cmath.exp(tail.value + lg.value) == pytest.approx(cmath.exp(P2), abs=1e-12)


def test_local_defects_for_zeta_are_small_negative():
    for p in sieve_range(2, 2000).tolist():
        d = prime_grid_sums(ZETA, None, np.array([1.0 + 0j]), p, p + 1, "defect")[0]
        assert abs(d.imag) < 1e-15
        assert d.real < 0
        assert abs(d) <= 1.1 / p**2


def test_vanishing_local_factor():
    # a file coefficient with |c(2)| > 2^{sigma} breaks |z| < 1
    src = CoefficientSource.character(1, [1])
    with pytest.raises(VanishingLocalFactorError):
        prime_grid_sums(src, None, np.array([0.0 + 0j]), 2, 3, "log")


# ---- order and orthogonality

def test_order_zeta():
    est = estimate_order(ZETA, [(10**3, 10**6), (10**4, 10**8)])
    assert abs(est.lam - 1) < 0.08
    assert abs(est.Lam - 1) < 0.08
    assert not est.degenerate


def test_order_zero_source():
    est = estimate_order(CoefficientSource.zero(), [(10**3, 10**6), (10**4, 10**7)])
    assert est.lam == 0 and est.Lam == 0 and est.degenerate


def test_order_character():
    est = estimate_order(CHI4, [(10**3, 10**6), (10**4, 10**8)])
    assert abs(est.lam - 1) < 0.1


def test_order_estimator_api():
    est = OrderEstimator(bands=((10**3, 10**5), (10**4, 10**6)))
    assert clone(est).get_params() == est.get_params()
    est.fit(ZETA)
    assert abs(est.lambda_ - 1) < 0.1 and est.Lambda_ >= est.lambda_


def test_orthogonality_control():
    prof = estimate_orthogonality(ZETA, ZETA, [(10**2, 10**4), (10**3, 10**6)])
    assert prof.trend == "non-decaying"
    for z in prof.sums:
        assert z.imag == 0 and z.real > 0
        assert abs(z.real - math.log(2)) < 0.1


def test_orthogonality_matches_moment_sums():
    from universality.primes import PrimeBand, band_moment_sum

    prof = estimate_orthogonality(ZETA, ZETA, [(10**2, 10**4), (10**3, 10**5)])
    for (lo, hi), z in zip(prof.bands, prof.sums):
        assert z.real == pytest.approx(band_moment_sum(PrimeBand.between(lo, hi), ZETA, 2), rel=1e-12)


def test_orthogonality_shifted_decays():
    bands = [(10**3, 10**6), (10**4, 10**8)]
    prof = estimate_orthogonality(ZETA, CoefficientSource.shifted_zeta(1.0), bands)
    for (lo, _), m in zip(prof.bands, prof.magnitudes):
        L = math.log(lo)
        # sum over [N, N^2) of p^{-1-i} ~ int_L^{2L} e^{-iy}/y dy, at most 3/(2L)
        assert m < 1.5 / L + 0.01


def test_orthogonality_against_zero():
    prof = estimate_orthogonality(ZETA, CoefficientSource.zero(), [(10, 100), (100, 10**4)])
    assert all(z == 0 for z in prof.sums)


@pytest.mark.parametrize("s", [1.0, 1 + 1j, 1.3 - 2j])
def test_power_prime_sum_against_sieve(s):
    x = 2 * 10**7
    p = eratosthenes(x).astype(np.float64)
    assert power_prime_sum(s, x) == pytest.approx(complex(np.sum(np.exp(-s * np.log(p)))), abs=1e-11)
