"""Segmented prime sieving and sums over prime bands ``[N, N**(1+xi))``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence, TypeVar

import numpy as np

__all__ = [
    "DEFAULT_CEILING",
    "SEGMENT_ENTRIES",
    "PrimeRangeError",
    "RangeTooLargeError",
    "InvalidRangeError",
    "CompensatedSum",
    "PrimeBand",
    "small_primes",
    "iter_prime_segments",
    "map_segments",
    "sieve_range",
    "prime_count",
    "band_moment_sum",
    "set_default_ceiling",
]

DEFAULT_CEILING = 10**9
# odd-only sieve entries per segment; one segment spans 2**21 integers
SEGMENT_ENTRIES = 1 << 20
# bands above this size are streamed segment by segment instead of cached
MATERIALIZE_LIMIT = 10**7

_ceiling = DEFAULT_CEILING

T = TypeVar("T")


class PrimeRangeError(ValueError):
    """Base class for rejected sieve ranges."""


class RangeTooLargeError(PrimeRangeError):
    pass


class InvalidRangeError(PrimeRangeError):
    pass


def set_default_ceiling(ceiling: int) -> int:
    """Set the process-wide prime ceiling; returns the previous value."""
    global _ceiling
    if ceiling < 3:
        raise ValueError("prime ceiling must be at least 3")
    previous, _ceiling = _ceiling, int(ceiling)
    return previous


def get_default_ceiling() -> int:
    return _ceiling


@lru_cache(maxsize=8)
def small_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` by a plain sieve of Eratosthenes."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    out = np.flatnonzero(is_prime).astype(np.int64)
    out.flags.writeable = False
    return out


def _check_range(lo: int, hi: int, ceiling: int | None) -> tuple[int, int, int]:
    lo, hi = int(lo), int(hi)
    ceiling = _ceiling if ceiling is None else int(ceiling)
    if lo > hi:
        raise InvalidRangeError(f"reversed range [{lo}, {hi})")
    if hi > ceiling + 1:
        raise RangeTooLargeError(f"upper end {hi} exceeds the prime ceiling {ceiling}")
    return max(lo, 2), hi, ceiling


def _segment_primes(start: int, stop: int, base: np.ndarray) -> np.ndarray:
    """Primes in ``[start, stop)`` for odd ``start``, sieving with odd ``base`` primes."""
    count = (stop - start + 1) // 2
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(count, dtype=bool)
    for p in base:
        p = int(p)
        pp = p * p
        if pp >= stop:
            break
        first = max(pp, -(-start // p) * p)
        if first % 2 == 0:
            first += p
        if first >= stop:
            continue
        mask[(first - start) // 2 :: p] = False
    out = start + 2 * np.flatnonzero(mask).astype(np.int64)
    if start == 1:
        out = out[1:]
    return out


def iter_prime_segments(
    lo: int, hi: int, ceiling: int | None = None, entries: int = SEGMENT_ENTRIES
) -> Iterator[np.ndarray]:
    """Yield the primes of ``[lo, hi)`` in ascending, non-empty segments.

    Segment boundaries depend only on ``lo``, ``hi`` and ``entries``, so any
    per-segment reduction is reproducible.
    """
    lo, hi, _ = _check_range(lo, hi, ceiling)
    if lo >= hi:
        return
    if lo <= 2 < hi:
        yield np.array([2], dtype=np.int64)
    start = max(lo, 3)
    if start % 2 == 0:
        start += 1
    if start >= hi:
        return
    base = small_primes(math.isqrt(hi - 1) + 1)[1:]
    span = 2 * entries
    while start < hi:
        stop = min(start + span, hi)
        seg = _segment_primes(start, stop, base)
        if seg.size:
            yield seg
        start = stop


def map_segments(
    fn: Callable[[np.ndarray], T],
    lo: int,
    hi: int,
    ceiling: int | None = None,
    n_jobs: int = 1,
) -> list[T]:
    """Apply ``fn`` to each prime segment of ``[lo, hi)``; results in ascending order."""
    if lo >= hi:
        return []
    segments = iter_prime_segments(lo, hi, ceiling)
    if n_jobs <= 1:
        return [fn(seg) for seg in segments]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, segments))


def sieve_range(lo: int, hi: int, ceiling: int | None = None) -> np.ndarray:
    """Primes in ``[lo, hi)`` in ascending order.

    >>> sieve_range(10, 30).tolist()
    [11, 13, 17, 19, 23, 29]
    """
    segs = list(iter_prime_segments(lo, hi, ceiling))
    if not segs:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(segs)


def prime_count(lo: int, hi: int, ceiling: int | None = None) -> int:
    if lo >= hi:
        return 0
    return sum(seg.size for seg in iter_prime_segments(lo, hi, ceiling))


class CompensatedSum:
    """Neumaier two-term accumulator for real or complex partial sums.

    Each ``add_array`` call folds in a pairwise (numpy) partial sum, so
    the result depends only on the order of calls, never on threading.
    ``error_bound`` is a first-order bound on the accumulated rounding.
    """

    __slots__ = ("_hi", "_lo", "_abs", "_terms")

    def __init__(self) -> None:
        self._hi = 0j
        self._lo = 0j
        self._abs = 0.0
        self._terms = 0

    @staticmethod
    def _two_sum(a: float, b: float) -> tuple[float, float]:
        s = a + b
        if abs(a) >= abs(b):
            return s, (a - s) + b
        return s, (b - s) + a

    def add(self, value: complex) -> None:
        value = complex(value)
        re, ere = self._two_sum(self._hi.real, value.real)
        im, eim = self._two_sum(self._hi.imag, value.imag)
        self._hi = complex(re, im)
        self._lo += complex(ere, eim)
        self._abs += abs(value)
        self._terms += 1

    def add_array(self, values: np.ndarray) -> None:
        if values.size == 0:
            return
        self.add(complex(np.sum(values)))
        # pairwise summation error: log2(n) roundings per term
        depth = max(1, int(values.size).bit_length())
        self._abs += float(np.sum(np.abs(values))) * depth
        self._terms += int(values.size) - 1

    @property
    def value(self) -> complex:
        return self._hi + self._lo

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def error_bound(self) -> float:
        return 4.0 * np.finfo(float).eps * self._abs


@dataclass(frozen=True)
class PrimeBand:
    """Primes in ``[lower, upper)`` with ``upper = floor(lower**(1 + xi))``."""

    lower: int
    xi: float
    upper: int = field(init=False)

    def __post_init__(self) -> None:
        if self.lower < 2:
            raise InvalidRangeError("band lower end must be at least 2")
        if not self.xi > 0:
            raise InvalidRangeError("band exponent xi must be positive")
        object.__setattr__(self, "upper", _int_power(self.lower, 1.0 + self.xi))

    @classmethod
    def between(cls, lower: int, upper: int) -> "PrimeBand":
        """Band with an explicit integer upper end (xi inferred)."""
        if upper <= lower:
            raise InvalidRangeError(f"empty band [{lower}, {upper})")
        band = cls(lower, math.log(upper) / math.log(lower) - 1.0)
        object.__setattr__(band, "upper", int(upper))
        return band

    @property
    def log_width(self) -> float:
        """``log(1 + xi)``, the Mertens mass of the band."""
        return math.log1p(self.xi)

    def segments(self, ceiling: int | None = None) -> Iterator[np.ndarray]:
        if self.upper <= self.lower:
            return iter(())
        return iter_prime_segments(self.lower, self.upper, ceiling)

    @property
    def primes(self) -> np.ndarray:
        if self.upper - self.lower > MATERIALIZE_LIMIT:
            raise MemoryError(
                f"band [{self.lower}, {self.upper}) is streamed only; use segments()"
            )
        if self.upper <= self.lower:
            return np.zeros(0, dtype=np.int64)
        return sieve_range(self.lower, self.upper)

    def split(self, at: int) -> tuple["PrimeBand", "PrimeBand"]:
        if not self.lower < at < self.upper:
            raise InvalidRangeError(f"split point {at} outside ({self.lower}, {self.upper})")
        return PrimeBand.between(self.lower, at), PrimeBand.between(at, self.upper)


def _int_power(base: int, exponent: float) -> int:
    x = float(base) ** exponent
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, x):
        return int(r)
    return int(math.floor(x))


def band_moment_sum(band: PrimeBand, source, power: int, n_jobs: int = 1) -> float:
    """Compensated ``sum |c(p)|**power / p`` over the primes of ``band``."""
    if power not in (1, 2, 4):
        raise ValueError("power must be 1, 2 or 4")
    if band.upper <= band.lower:
        return 0.0

    def part(primes: np.ndarray) -> complex:
        mag = np.abs(source.prime_values(primes))
        return complex(np.sum(mag**power / primes))

    acc = CompensatedSum()
    for value in map_segments(part, band.lower, band.upper, n_jobs=n_jobs):
        acc.add(value)
    return max(0.0, acc.real)


def weighted_prime_sum(
    lo: int,
    hi: int,
    term: Callable[[np.ndarray], np.ndarray],
    n_jobs: int = 1,
) -> CompensatedSum:
    """Sum ``term(primes)`` over ``[lo, hi)`` with deterministic reduction."""
    acc = CompensatedSum()
    if hi <= lo or hi <= 2:
        return acc
    for values in map_segments(term, lo, hi, n_jobs=n_jobs):
        acc.add_array(values)
    return acc


def collect(segments: Sequence[np.ndarray]) -> np.ndarray:
    if not segments:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(list(segments))
