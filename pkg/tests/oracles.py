"""Independent reference computations used as test oracles.

Nothing here imports the package under test.
"""

from __future__ import annotations

import cmath
import itertools
import math

import mpmath
import numpy as np


def trial_division_primes(lo: int, hi: int) -> list[int]:
    """Primes in ``[lo, hi)`` by trial division."""
    out = []
    for n in range(max(lo, 2), hi):
        if all(n % d for d in range(2, math.isqrt(n) + 1)):
            out.append(n)
    return out


def eratosthenes(n: int) -> np.ndarray:
    """Primes ``<= n`` from a bytearray sieve."""
    flags = bytearray([1]) * (n + 1)
    flags[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return np.flatnonzero(np.frombuffer(bytes(flags), dtype=np.uint8)).astype(np.int64)


def prime_power_sum(s: complex, lo: int, hi: int, shift: float = 0.0) -> complex:
    """``sum_{lo <= p < hi} p^{-s - i shift}`` over the bytearray sieve."""
    p = eratosthenes(hi - 1)
    p = p[p >= lo].astype(np.float64)
    return complex(np.sum(np.exp(-(s + 1j * shift) * np.log(p))))


def zeta(s: complex) -> complex:
    return complex(mpmath.zeta(s))


def log_zeta_euler_tail(lo: int, hi: int) -> float:
    """``sum_{lo <= p < hi} [1/p + log(1 - 1/p)]``."""
    p = eratosthenes(hi - 1)
    p = p[p >= lo].astype(np.float64)
    return float(np.sum(1.0 / p + np.log1p(-1.0 / p)))


def brute_force_round(x: np.ndarray, a: np.ndarray, step_deg: float = 2.0) -> float:
    """Smallest ``||sum (a_j - b_j) x_j||^2`` over a phase grid (small m only)."""
    phases = np.exp(1j * np.deg2rad(np.arange(0.0, 360.0, step_deg)))
    target = a @ x
    best = math.inf
    for combo in itertools.product(phases, repeat=len(a)):
        dev = target - np.array(combo) @ x
        best = min(best, float(np.sum(np.abs(dev) ** 2)))
    return best


def shift_grid_search(targets: dict, eps: float, T: float, step: float) -> np.ndarray:
    """All grid ``t`` in ``[0, T]`` with ``max_p |p^{it} - a_p| < eps``."""
    t = np.arange(0.0, T, step)
    dev = np.zeros_like(t)
    for p, a in targets.items():
        dev = np.maximum(dev, np.abs(np.exp(1j * t * math.log(p)) - a))
    return t[dev < eps]


def arc_fraction(radius: float) -> float:
    """Fraction of the unit circle within chord distance ``radius`` of 1."""
    return 2.0 * math.asin(radius / 2.0) / math.pi


def laplace_closed_form_flat(value: complex, B: float, s: complex) -> complex:
    """``int_0^B value e^{-sx} dx``."""
    return value * (1 - cmath.exp(-s * B)) / s


def direct_dirichlet(coeff, s: complex, X: int) -> complex:
    """``sum_{n <= X} coeff(n) n^{-s}`` with mpmath."""
    return complex(mpmath.fsum(coeff(n) * mpmath.power(n, -s) for n in range(1, X + 1)))
