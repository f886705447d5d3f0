"""Coefficient sources, standard-type series and their evaluation in Re(s) > 1."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels
from .assignment import UnimodularAssignment
from .exceptions import (
    CoefficientFileError,
    DivergenceError,
    MissingCoefficientError,
    VanishingLocalFactorError,
)
from .primes import PrimeBand, band_moment_sum, get_default_ceiling, iter_prime_segments, small_primes

__all__ = [
    "Estimate",
    "CoefficientSource",
    "StandardTypeSeries",
    "OrderEstimate",
    "OrthogonalityProfile",
    "OrderEstimator",
    "coefficient",
    "evaluate_dirichlet",
    "log_evaluate_euler",
    "twisted_prime_sum",
    "euler_tail_log",
    "estimate_order",
    "estimate_orthogonality",
    "prime_grid_sums",
    "quadratic_character",
]

# prime-power depth for the |c(p^k)| checks: k <= 40 or p^k <= 1e12
MAX_POWER = 40
MAX_PRIME_POWER = 10**12
DIRECT_PRIME_SUM = 1 << 22


@dataclass(frozen=True)
class Estimate:
    """A value with an absolute error radius."""

    value: complex
    error: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", complex(self.value))
        object.__setattr__(self, "error", float(self.error))

    def __complex__(self) -> complex:
        return complex(self.value)

    def contains(self, other: complex, slack: float = 0.0) -> bool:
        return abs(complex(other) - self.value) <= self.error + slack


def _power_depth(p: int) -> int:
    k = 1
    while k < MAX_POWER and p ** (k + 1) <= MAX_PRIME_POWER:
        k += 1
    return k


@dataclass(frozen=True, eq=False)
class CoefficientSource:
    """Euler-product coefficients ``c(p^k)`` of one Dirichlet series.

    Build with :meth:`zeta`, :meth:`shifted_zeta`, :meth:`character`,
    :meth:`from_file` or :meth:`zero`.  Values are immutable after construction.
    """

    kind: str
    shift: float = 0.0
    modulus: int = 0
    table: tuple = ()
    path: str | None = None
    majorant: float = 1.0
    _primes: np.ndarray = field(default=None, repr=False)
    _first: np.ndarray = field(default=None, repr=False)
    _powers: dict = field(default=None, repr=False)

    # constructors ----------------------------------------------------------
    @classmethod
    def zeta(cls) -> "CoefficientSource":
        return cls("zeta")

    @classmethod
    def shifted_zeta(cls, a: float) -> "CoefficientSource":
        """Coefficients of ``zeta(s + i a)``: ``c(p^k) = p^{-ika}``."""
        return cls("shifted-zeta", shift=float(a))

    @classmethod
    def character(cls, modulus: int, table: Sequence[complex]) -> "CoefficientSource":
        modulus = int(modulus)
        values = tuple(complex(v) for v in table)
        if modulus < 1 or len(values) != modulus:
            raise ValueError(f"character table must have exactly {modulus} entries")
        for r, v in enumerate(values):
            if abs(v) > 1e-12 and abs(abs(v) - 1.0) > 1e-9:
                raise ValueError(f"chi({r}) = {v} is neither zero nor unimodular")
            if math.gcd(r, modulus) != 1 and abs(v) > 1e-12:
                raise ValueError(f"chi({r}) must vanish since gcd({r}, {modulus}) > 1")
        return cls("dirichlet-character", modulus=modulus, table=values)

    @classmethod
    def zero(cls) -> "CoefficientSource":
        return cls("zero", majorant=0.0)

    @classmethod
    def from_file(cls, path, majorant: float | None = None) -> "CoefficientSource":
        """Read ``p k re im`` lines sorted by ``(p, k)``."""
        path = Path(path)
        first: dict[int, complex] = {}
        powers: dict[tuple[int, int], complex] = {}
        last = None
        with path.open() as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise CoefficientFileError(path, lineno, "expected 4 fields 'p k re im'")
                try:
                    p, k = int(parts[0]), int(parts[1])
                    value = complex(float(parts[2]), float(parts[3]))
                except ValueError as exc:
                    raise CoefficientFileError(path, lineno, str(exc)) from None
                if p < 2 or k < 1:
                    raise CoefficientFileError(path, lineno, "need p >= 2 and k >= 1")
                if last is not None and (p, k) <= last:
                    raise CoefficientFileError(path, lineno, "lines must be sorted by (p, k)")
                if not math.isfinite(value.real) or not math.isfinite(value.imag):
                    raise CoefficientFileError(path, lineno, "non-finite coefficient")
                if abs(value) >= float(p) ** k:
                    raise CoefficientFileError(path, lineno, f"|c({p}^{k})| >= {p}^{k}")
                last = (p, k)
                if k == 1:
                    first[p] = value
                else:
                    powers[(p, k)] = value
        listed = np.array(sorted(first), dtype=np.int64)
        if listed.size:
            known = small_primes(int(listed[-1]))
            if not np.all(np.isin(listed, known)):
                bad = listed[~np.isin(listed, known)][0]
                raise CoefficientFileError(path, 0, f"{bad} is not prime")
        values = np.array([first[int(p)] for p in listed], dtype=np.complex128)
        if majorant is None:
            majorant = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
        return cls(
            "custom-file",
            path=str(path),
            majorant=float(majorant),
            _primes=listed,
            _first=values,
            _powers=powers,
        )

    # descriptors -----------------------------------------------------------
    @property
    def completely_multiplicative(self) -> bool:
        return not (self.kind == "custom-file" and self._powers)

    @property
    def mean_shift(self) -> float | None:
        """``a`` when the coefficients average like ``n^{-ia}`` (zeta-type), else None."""
        if self.kind == "zeta":
            return 0.0
        if self.kind == "shifted-zeta":
            return self.shift
        return None

    def describe(self) -> dict:
        if self.kind == "shifted-zeta":
            return {"kind": self.kind, "a": self.shift}
        if self.kind == "dirichlet-character":
            return {
                "kind": self.kind,
                "modulus": self.modulus,
                "table": [[v.real, v.imag] for v in self.table],
            }
        if self.kind == "custom-file":
            return {"kind": self.kind, "path": self.path, "majorant": self.majorant}
        return {"kind": self.kind}

    # coefficient access ----------------------------------------------------
    def prime_values(self, primes) -> np.ndarray:
        """``c(p)`` for an array of primes."""
        primes = np.asarray(primes, dtype=np.int64)
        if self.kind == "zeta":
            return np.ones(primes.shape, dtype=np.complex128)
        if self.kind == "zero":
            return np.zeros(primes.shape, dtype=np.complex128)
        if self.kind == "shifted-zeta":
            return np.exp(-1j * self.shift * np.log(primes.astype(np.float64)))
        if self.kind == "dirichlet-character":
            return np.asarray(self.table, dtype=np.complex128)[primes % self.modulus]
        pos = np.searchsorted(self._primes, primes)
        pos_c = np.minimum(pos, max(self._primes.size - 1, 0))
        ok = (pos < self._primes.size) & (self._primes[pos_c] == primes) if self._primes.size else np.zeros(primes.shape, bool)
        if not np.all(ok):
            missing = int(primes[~ok].flat[0])
            raise MissingCoefficientError(f"{self.path}: no coefficient for p={missing}")
        return self._first[pos_c]

    def coefficient(self, p: int, k: int = 1) -> complex:
        if k < 1:
            raise ValueError("k must be positive")
        if self.kind == "custom-file" and (p, k) in self._powers:
            return self._powers[(p, k)]
        base = complex(self.prime_values(np.array([p]))[0])
        if self.kind == "shifted-zeta":
            return cmath.exp(-1j * k * self.shift * math.log(p))
        return base**k

    def local_factor(self, p: int, s: complex, omega: complex = 1.0) -> complex:
        """``F_p(s) = sum_k omega^k c(p^k) p^{-ks}`` (closed form when completely multiplicative)."""
        if self.completely_multiplicative or not any(q == p for q, _ in self._powers):
            return 1.0 / (1.0 - omega * self.coefficient(p) * p ** (-s))
        total = 1.0 + 0j
        for k in range(1, _power_depth(p) + 1):
            total += omega**k * self.coefficient(p, k) * p ** (-k * s)
        return total

    def dirichlet_coefficients(self, X: int) -> np.ndarray:
        """``a[n] = c(n)`` for ``0 <= n <= X`` (``a[0] = 0``)."""
        n = np.arange(X + 1, dtype=np.int64)
        if self.kind == "zeta":
            out = np.ones(X + 1, dtype=np.complex128)
        elif self.kind == "zero":
            out = np.zeros(X + 1, dtype=np.complex128)
            if X >= 1:
                out[1] = 1.0
        elif self.kind == "shifted-zeta":
            out = np.exp(-1j * self.shift * np.log(np.maximum(n, 1).astype(np.float64)))
        elif self.kind == "dirichlet-character":
            out = np.asarray(self.table, dtype=np.complex128)[n % self.modulus]
        else:
            out = self._multiplicative_build(X)
        out[0] = 0.0
        return out

    def _multiplicative_build(self, X: int) -> np.ndarray:
        spf = np.zeros(X + 1, dtype=np.int64)
        for p in small_primes(X).tolist():
            view = spf[p::p]
            view[view == 0] = p
        out = np.zeros(X + 1, dtype=np.complex128)
        if X >= 1:
            out[1] = 1.0
        for m in range(2, X + 1):
            p = int(spf[m])
            r, k = m, 0
            while r % p == 0:
                r //= p
                k += 1
            out[m] = self.coefficient(p, k) * out[r]
        return out

    def prime_power_tail(self, prime_cutoff: int) -> float:
        """Truncated ``sum_p sum_{k>=2} |c(p^k)| k log p / p^k``."""
        total = 0.0
        for seg in iter_prime_segments(2, prime_cutoff + 1):
            if self.completely_multiplicative:
                mag = np.abs(self.prime_values(seg))
                lp = np.log(seg.astype(np.float64))
                for k in range(2, MAX_POWER + 1):
                    ok = k * lp <= math.log(MAX_PRIME_POWER)
                    if not ok.any():
                        break
                    total += float(np.sum((mag[ok] ** k) * k * lp[ok] / np.exp(k * lp[ok])))
            else:
                for p in seg.tolist():
                    for k in range(2, _power_depth(p) + 1):
                        total += abs(self.coefficient(p, k)) * k * math.log(p) / p**k
        return total


def coefficient(source: CoefficientSource, p: int, k: int = 1) -> complex:
    return source.coefficient(p, k)


def quadratic_character(d: int) -> CoefficientSource:
    """Kronecker symbol ``(d/.)`` as a character source, ``|d| <= 10**4``."""
    from sympy import jacobi_symbol

    if d == 0 or abs(d) > 10**4:
        raise ValueError("need 0 < |d| <= 10**4")
    q = abs(d) if d % 4 in (0, 1) else 4 * abs(d)

    def kron(n: int) -> int:
        if math.gcd(n, q) != 1:
            return 0
        sign, m = 1, n
        while m % 2 == 0:
            m //= 2
            sign *= 1 if d % 8 in (1, 7) else -1
        return sign * jacobi_symbol(d % m, m) if m > 1 else sign

    return CoefficientSource.character(q, [kron(r) if r else 0 for r in range(q)])


# --------------------------------------------------------------------------
# standard-type series


@dataclass(frozen=True)
class OrderEstimate:
    lam: float
    Lam: float
    evidence: tuple = ()
    prime_power_tail: float = 0.0
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "Lambda": self.Lam,
            "degenerate": self.degenerate,
            "prime_power_tail": self.prime_power_tail,
            "evidence": [dict(e) for e in self.evidence],
        }


@dataclass(frozen=True, eq=False)
class StandardTypeSeries:
    """``L = L2 * L1 + L3`` with ``L1`` an Euler product and ``L2``, ``L3`` finite.

    ``multiplier`` holds ``b(2), ..., b(M)`` (``b(1) = 1`` implicit) and
    ``additive`` holds ``d(1), ..., d(M)``.  ``tail_bound`` declares a bound
    for the omitted parts of ``sum |b(n)|/n`` and ``sum |d(n)|/n``.
    """

    euler_part: CoefficientSource
    multiplier: tuple = ()
    additive: tuple = ()
    order: OrderEstimate | None = None
    tail_bound: float = 0.0

    def __post_init__(self) -> None:
        b = tuple(complex(x) for x in self.multiplier)
        d = tuple(complex(x) for x in self.additive)
        for name, coeffs in (("multiplier", b), ("additive", d)):
            if not all(math.isfinite(abs(c)) for c in coeffs):
                raise ValueError(f"{name} coefficients must be finite")
        object.__setattr__(self, "multiplier", b)
        object.__setattr__(self, "additive", d)

    @property
    def is_pure_euler(self) -> bool:
        return not any(self.multiplier) and not any(self.additive)

    def majorant_sums(self) -> tuple[float, float]:
        """``(sum |b(n)|/n, sum |d(n)|/n)`` over the stored range at Re(s) = 1."""
        sb = sum(abs(c) / n for n, c in enumerate(self.multiplier, 2))
        sd = sum(abs(c) / n for n, c in enumerate(self.additive, 1))
        return sb, sd

    def multiplier_value(self, s: complex) -> complex:
        return 1.0 + sum(c * n ** (-s) for n, c in enumerate(self.multiplier, 2))

    def additive_value(self, s: complex) -> complex:
        return sum((c * n ** (-s) for n, c in enumerate(self.additive, 1)), 0j)


def _as_series(series) -> StandardTypeSeries:
    if isinstance(series, CoefficientSource):
        return StandardTypeSeries(series)
    return series


def _check_half_plane(s: complex, margin: float) -> None:
    if s.real <= 1.0:
        raise DivergenceError(f"Re(s) = {s.real} <= 1; no analytic continuation is implemented")
    if s.real < 1.0 + margin:
        raise ValueError(f"Re(s) = {s.real} is closer than {margin} to the abscissa 1")


def evaluate_dirichlet(
    series,
    s: complex,
    cutoff: int = 10**6,
    margin: float = 0.05,
    tail: str = "bound",
) -> Estimate:
    """Partial sum of ``L(s)`` over ``n <= cutoff`` with a certified tail radius.

    With ``tail="integral"`` zeta-type sources also add the integral
    ``cutoff^{1-s'}/(s'-1)`` of the tail; the radius then bounds the
    remaining sum-minus-integral difference.
    """
    series = _as_series(series)
    s = complex(s)
    _check_half_plane(s, margin)
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    src = series.euler_part
    coeffs = src.dirichlet_coefficients(cutoff)
    logn = np.log(np.maximum(np.arange(cutoff + 1), 1).astype(np.float64))
    partial = complex(_kernels.prime_sums_grid(coeffs[1:], logn[1:], np.array([s]))[0])
    sigma = s.real
    shift = src.mean_shift
    if tail == "integral" and shift is not None:
        s1 = s + 1j * shift
        partial += cutoff ** (1 - s1) / (s1 - 1)
        tail_err = abs(s1) * cutoff ** (-sigma) / sigma
    elif tail in ("bound", "integral"):
        tail_err = src.majorant * cutoff ** (1 - sigma) / (sigma - 1)
    else:
        raise ValueError(f"unknown tail mode {tail!r}")
    l2 = series.multiplier_value(s)
    l2_abs = 1.0 + sum(abs(c) * n ** (-sigma) for n, c in enumerate(series.multiplier, 2))
    value = l2 * partial + series.additive_value(s)
    rounding = 8 * np.finfo(float).eps * (abs(partial) + cutoff ** (1 - sigma) / (sigma - 1) + 1)
    error = l2_abs * tail_err + rounding + series.tail_bound
    return Estimate(value, float(error))


# --------------------------------------------------------------------------
# prime sums


def _omega_values(omega, primes: np.ndarray) -> np.ndarray:
    if omega is None:
        return np.ones(primes.shape, dtype=np.complex128)
    return omega.values(primes)


def prime_grid_sums(
    source: CoefficientSource,
    omega: UnimodularAssignment | None,
    s,
    lo: int,
    hi: int,
    mode: str = "linear",
    chunk: int = 1 << 18,
) -> np.ndarray:
    """Sums over primes in ``[lo, hi)`` at every point of ``s``.

    ``mode`` selects the summand with ``z = omega(p) c(p) p^{-s}``:
    ``"linear"`` -> ``z``; ``"log"`` -> ``log F_p(s, omega)``;
    ``"defect"`` -> ``z - log F_p(s, omega)``.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128)).ravel()
    out_hi = np.zeros(s_arr.shape, dtype=np.complex128)
    out_lo = np.zeros(s_arr.shape, dtype=np.complex128)
    lo = max(int(lo), 2)
    if hi <= lo:
        return out_hi
    cm = source.completely_multiplicative
    for seg in iter_prime_segments(lo, int(hi)):
        for start in range(0, seg.size, chunk):
            primes = seg[start : start + chunk]
            w = _omega_values(omega, primes) * source.prime_values(primes)
            lp = np.log(primes.astype(np.float64))
            if mode == "linear":
                part = _kernels.prime_sums_grid(w, lp, s_arr)
            elif cm:
                part, zmax, jmax = _kernels.log_factor_sums_grid(w, lp, s_arr, mode == "defect")
                if zmax >= 1.0:
                    bad = int(primes[jmax])
                    raise VanishingLocalFactorError(bad, s_arr[0], f"|c(p) p^-s| = {zmax:.6g} >= 1")
            else:
                part = _general_log_sums(source, omega, primes, s_arr, mode)
            # two-term fold of per-chunk partials
            t = out_hi + part
            big = np.abs(out_hi) >= np.abs(part)
            out_lo += np.where(big, (out_hi - t) + part, (part - t) + out_hi)
            out_hi = t
    return out_hi + out_lo


def _general_log_sums(source, omega, primes, s_arr, mode) -> np.ndarray:
    out = np.zeros(s_arr.shape, dtype=np.complex128)
    om = _omega_values(omega, primes)
    for p, w in zip(primes.tolist(), om.tolist()):
        for i, s in enumerate(s_arr):
            F = source.local_factor(p, s, w)
            if abs(F - 1.0) >= 1.0 or F == 0:
                raise VanishingLocalFactorError(p, s, f"|F_p - 1| = {abs(F - 1):.6g} >= 1")
            logF = cmath.log(F)
            if mode == "log":
                out[i] += logF
            else:
                out[i] += w * source.coefficient(p) * p ** (-s) - logF
    return out


def _scalar_or_array(values: np.ndarray, s):
    return complex(values[0]) if np.ndim(s) == 0 else values.reshape(np.shape(s))


def twisted_prime_sum(source, omega, s, P_lo: int, P_hi: int):
    """``sum_{P_lo <= p < P_hi} omega(p) c(p) / p^s`` (scalar or array ``s``)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    if np.any(s_arr.real < 1.0):
        raise DivergenceError("twisted prime sums need Re(s) >= 1")
    return _scalar_or_array(prime_grid_sums(source, omega, s_arr, P_lo, P_hi), s)


def _log_tail_bound(maj: float, P: int, sigma: float) -> float:
    """Bound for ``sum_{p > P} |log(1 - z_p)|`` with ``|z_p| <= maj p^-sigma``."""
    if maj == 0.0:
        return 0.0
    if sigma <= 1.0:
        return math.inf
    q = maj * P ** (-sigma)
    if q >= 1:
        return math.inf
    return maj * P ** (1 - sigma) / (sigma - 1) / (1 - q)


def _defect_tail_bound(maj: float, P: int, sigma: float) -> float:
    """Bound for ``sum_{p > P} |z_p + log(1 - z_p)| <= sum |z|^2 / (2 (1 - |z|))``."""
    if maj == 0.0:
        return 0.0
    q = maj * P ** (-sigma)
    if q >= 1:
        return math.inf
    return maj**2 * P ** (1 - 2 * sigma) / (2 * sigma - 1) / (2 * (1 - q))


def log_evaluate_euler(source: CoefficientSource, s: complex, prime_cutoff: int) -> Estimate:
    """``sum_{p <= cutoff} log F_p(s)`` with principal local logs, plus a tail radius."""
    s = complex(s)
    if s.real <= 1.0:
        raise DivergenceError(f"Re(s) = {s.real} <= 1")
    if prime_cutoff < 2:
        return Estimate(0j, 0.0)
    value = complex(prime_grid_sums(source, None, np.array([s]), 2, prime_cutoff + 1, "log")[0])
    return Estimate(value, _log_tail_bound(source.majorant, prime_cutoff, s.real))


def euler_tail_log(source: CoefficientSource, omega, s: complex, prime_cutoff: int) -> Estimate:
    """``log E(s, omega) = sum_p [omega(p) c(p) p^{-s} - log F_p(s, omega)]`` truncated."""
    s = complex(s)
    if s.real < 1.0:
        raise DivergenceError(f"Re(s) = {s.real} < 1")
    if prime_cutoff < 2:
        return Estimate(0j, _defect_tail_bound(source.majorant, 1, s.real))
    value = complex(prime_grid_sums(source, omega, np.array([s]), 2, prime_cutoff + 1, "defect")[0])
    return Estimate(value, _defect_tail_bound(source.majorant, prime_cutoff, s.real))


# --------------------------------------------------------------------------
# order and orthogonality evidence


def _bands(bands) -> list[PrimeBand]:
    out = []
    for b in bands:
        if isinstance(b, PrimeBand):
            out.append(b)
        else:
            lower, upper = b
            out.append(PrimeBand.between(int(lower), int(upper)))
    return out


def estimate_order(
    source: CoefficientSource,
    bands,
    tail_cutoff: int = 10**5,
) -> OrderEstimate:
    """Band evidence for the order ``(lambda, Lambda)`` of an Euler product."""
    bands = _bands(bands)
    if len(bands) < 2:
        raise ValueError("need at least two bands")
    ordered = sorted(bands, key=lambda b: b.lower)
    evidence = []
    lam, Lam = math.inf, 0.0
    for band in bands:
        m1 = band_moment_sum(band, source, 1)
        m4 = band_moment_sum(band, source, 4)
        w = band.log_width
        evidence.append(
            {"lower": band.lower, "upper": band.upper, "xi": band.xi,
             "moment1": m1, "moment4": m4, "log_width": w}
        )
        lam = min(lam, m1 / w)
        Lam = max(Lam, m4 / w)
    disjoint = all(a.upper <= b.lower for a, b in zip(ordered, ordered[1:]))
    tail = source.prime_power_tail(tail_cutoff)
    return OrderEstimate(
        lam=float(lam),
        Lam=float(Lam),
        evidence=tuple(dict(e, disjoint=disjoint) for e in evidence),
        prime_power_tail=tail,
        degenerate=Lam == 0.0,
    )


def _power_partial_sums(s: complex, r: int, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``sum_{2 <= n <= v} n^{-s}`` for ``v = 0..r`` (direct) and for ``values > r`` (Euler-Maclaurin from ``r``)."""
    n = np.arange(1, r + 1, dtype=np.float64)
    direct = np.zeros(r + 1, dtype=np.complex128)
    direct[1:] = np.cumsum(np.exp(-s * np.log(n)))
    direct[1:] -= 1.0
    a = float(r)
    b = values.astype(np.float64)
    fa, fb = a ** -s, b ** -s
    if s == 1:
        integral = np.log(b / a)
    else:
        integral = (b ** (1 - s) - a ** (1 - s)) / (1 - s)
    d1 = lambda u: -s * u ** (-s - 1)  # noqa: E731
    d3 = lambda u: -s * (s + 1) * (s + 2) * u ** (-s - 3)  # noqa: E731
    em = integral + (fb - fa) / 2 + (d1(b) - d1(a)) / 12 - (d3(b) - d3(a)) / 720
    return direct, direct[r] + em


def power_prime_sum(s: complex, x: int) -> complex:
    """``sum_{p <= x} p^{-s}`` without sieving to ``x``.

    Lucy's recursion over the values ``x // k`` costs about ``x^{3/4}``
    operations; the starting partial sums of ``n^{-s}`` beyond ``sqrt(x)``
    come from Euler-Maclaurin, accurate to roughly ``|s|^5 x^{-5/2}``.
    """
    x = int(x)
    if x < 2:
        return 0j
    s = complex(s)
    if x <= DIRECT_PRIME_SUM:
        ps = small_primes(x).astype(np.float64)
        return complex(np.sum(np.exp(-s * np.log(ps))))
    r = math.isqrt(x)
    ks = np.arange(1, r + 1, dtype=np.int64)
    big = x // ks
    lo, hi_part = _power_partial_sums(s, r, big)
    hi = np.zeros(r + 1, dtype=np.complex128)
    hi[1:] = hi_part
    is_prime = np.zeros(r + 1, dtype=np.bool_)
    is_prime[small_primes(r)] = True
    _kernels.lucy_prime_sums(x, r, is_prime, lo, hi, s)
    return complex(hi[1])



@dataclass(frozen=True)
class OrthogonalityProfile:
    bands: tuple
    sums: tuple
    magnitudes: tuple
    trend: str
    decay_ratio: float

    def as_dict(self) -> dict:
        return {
            "bands": [list(b) for b in self.bands],
            "sums": [[z.real, z.imag] for z in self.sums],
            "magnitudes": list(self.magnitudes),
            "trend": self.trend,
            "decay_ratio": self.decay_ratio,
        }


def estimate_orthogonality(src_a: CoefficientSource, src_b: CoefficientSource, bands) -> OrthogonalityProfile:
    """Per-band ``sum a(p) conj(b(p)) / p`` and a decay summary."""
    bands = _bands(bands)
    if len(bands) < 2:
        raise ValueError("need at least two bands")
    if any(b2.lower <= b1.lower for b1, b2 in zip(bands, bands[1:])):
        raise ValueError("band lower ends must increase")
    sums = []
    for band in bands:
        shifts = (src_a.mean_shift, src_b.mean_shift)
        if band.upper - 1 > get_default_ceiling() and None not in shifts:
            # zeta-type pair: a(p) conj(b(p)) / p = p^{-s} with s = 1 + i(a - b)
            s_pair = complex(1.0, shifts[0] - shifts[1])
            sums.append(power_prime_sum(s_pair, band.upper - 1) - power_prime_sum(s_pair, band.lower - 1))
            continue
        acc_hi, acc_lo = 0j, 0j
        for seg in band.segments():
            part = complex(np.sum(src_a.prime_values(seg) * np.conj(src_b.prime_values(seg)) / seg))
            t = acc_hi + part
            acc_lo += (acc_hi - t) + part if abs(acc_hi) >= abs(part) else (part - t) + acc_hi
            acc_hi = t
        sums.append(acc_hi + acc_lo)
    mags = [abs(z) for z in sums]
    if mags[0] == 0.0:
        trend, ratio = ("zero" if max(mags) == 0.0 else "growing"), (0.0 if max(mags) == 0 else math.inf)
    else:
        ratio = mags[-1] / mags[0]
        if ratio <= 0.5:
            trend = "decaying"
        elif ratio < 0.9:
            trend = "weakly-decaying"
        else:
            trend = "non-decaying"
    return OrthogonalityProfile(
        bands=tuple((b.lower, b.upper) for b in bands),
        sums=tuple(sums),
        magnitudes=tuple(mags),
        trend=trend,
        decay_ratio=float(ratio),
    )


class OrderEstimator(BaseEstimator):
    """Estimate ``(lambda, Lambda)`` of a coefficient source from prime bands.

    ``fit`` takes the :class:`CoefficientSource` as its only argument.
    """

    def __init__(self, bands=((10**3, 10**6), (10**4, 10**8)), tail_cutoff=10**5):
        self.bands = bands
        self.tail_cutoff = tail_cutoff

    def fit(self, source, y=None):
        est = estimate_order(source, self.bands, tail_cutoff=self.tail_cutoff)
        self.order_ = est
        self.lambda_ = est.lam
        self.Lambda_ = est.Lam
        self.evidence_ = est.evidence
        return self
