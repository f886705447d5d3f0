import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import eratosthenes, trial_division_primes
from universality.primes import (
    CompensatedSum,
    InvalidRangeError,
    PrimeBand,
    RangeTooLargeError,
    band_moment_sum,
    get_default_ceiling,
    iter_prime_segments,
    prime_count,
    set_default_ceiling,
    sieve_range,
)
from universality.series import CoefficientSource


def test_small_window():
    assert sieve_range(10, 30).tolist() == [11, 13, 17, 19, 23, 29]


def test_single_prime():
    assert sieve_range(2, 3).tolist() == [2]


def test_window_matches_trial_division():
    lo, hi = 10**6, 10**6 + 100
    assert sieve_range(lo, hi).tolist() == trial_division_primes(lo, hi)


def test_full_range_matches_bytearray_sieve():
    assert np.array_equal(sieve_range(2, 3 * 10**6), eratosthenes(3 * 10**6 - 1))


def test_segment_boundaries_are_seamless():
    # several segments of 2^21 integers
    lo, hi = 10**7, 10**7 + 5 * 2**21
    segs = list(iter_prime_segments(lo, hi))
    assert len(segs) > 1
    joined = np.concatenate(segs)
    assert np.all(np.diff(joined) > 0)
    assert joined.size == prime_count(lo, hi)
    ref = eratosthenes(hi - 1)
    assert np.array_equal(joined, ref[ref >= lo])


@given(st.integers(2, 20000), st.integers(0, 20000), st.integers(0, 20000))
def test_concatenation(a, d1, d2):
    b, c = a + d1, a + d1 + d2
    whole = sieve_range(a, c)
    assert np.array_equal(whole, np.concatenate([sieve_range(a, b), sieve_range(b, c)]))


def test_invalid_and_ceiling():
    with pytest.raises(InvalidRangeError):
        sieve_range(30, 10)
    with pytest.raises(RangeTooLargeError):
        sieve_range(2, 10**9 + 10)
    prev = set_default_ceiling(100)
    try:
        assert get_default_ceiling() == 100
        with pytest.raises(RangeTooLargeError):
            sieve_range(50, 200)
    finally:
        set_default_ceiling(prev)


def test_band_moment_zeta_near_log2():
    band = PrimeBand.between(10**3, 10**6)
    zeta = CoefficientSource.zeta()
    p = eratosthenes(10**6 - 1)
    p = p[p >= 10**3]
    v1 = band_moment_sum(band, zeta, 1)
    assert v1 == pytest.approx(float(np.sum(1.0 / p)), rel=1e-12)
    assert abs(v1 - math.log(2)) < 0.05
    assert band_moment_sum(band, zeta, 4) == pytest.approx(v1, rel=1e-14)


def test_empty_band():
    band = PrimeBand(10, 1e-6)
    assert band.upper == band.lower
    assert band_moment_sum(band, CoefficientSource.zeta(), 1) == 0.0


@pytest.mark.parametrize("N", [10**3, 10**4, 10**5])
def test_mertens_band(N):
    prev = set_default_ceiling(10**10)
    try:
        v = band_moment_sum(PrimeBand.between(N, N * N), CoefficientSource.zeta(), 1)
    finally:
        set_default_ceiling(prev)
    assert abs(v - math.log(2)) < 0.05


@given(st.integers(1000, 200000), st.floats(0.05, 0.95))
def test_band_additivity(lo, frac):
    band = PrimeBand.between(lo, 4 * lo)
    at = int(lo + frac * 3 * lo)
    left, right = band.split(at)
    src = CoefficientSource.shifted_zeta(0.5)
    whole = band_moment_sum(band, src, 1)
    assert whole == pytest.approx(band_moment_sum(left, src, 1) + band_moment_sum(right, src, 1), rel=1e-12)


def test_compensated_sum_beats_naive():
    acc = CompensatedSum()
    vals = [1e16, 1.0, -1e16] * 1000
    for v in vals:
        acc.add(v)
    assert acc.real == 1000.0
