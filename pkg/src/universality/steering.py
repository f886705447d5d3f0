"""Steering prime sums with unimodular twists.

Building blocks, from the bottom up:

* :func:`unimodular_round` rounds ``|a_j| <= 1`` coefficients to the unit
  circle with ``||sum (a_j - b_j) x_j||^2 <= 4 sum ||x_j||^2``.
* :func:`correction_step` is one greedy contraction over a prime range.
* :func:`steer_block` iterates it on ``[P, P^(1+xi))`` and rounds.
* :func:`steer_constants` hits prescribed constants ``sum_p omega c_k / p``.
* :func:`steer_function` assembles an ``omega`` whose prime sums follow
  Laplace targets on a compact grid, with the error budget itemized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels
from .assignment import UnimodularAssignment
from .exceptions import (
    AdmissibilityError,
    BasePhaseDivergenceError,
    ContractionError,
    RoundingError,
    ScheduleOverflowError,
    SteeringError,
    VanishingLocalFactorError,
)
from .primes import _int_power, get_default_ceiling, iter_prime_segments, sieve_range
from .series import CoefficientSource, prime_grid_sums
from .targets import CompactDomain, LaplaceTarget, admissibility_bound, admissibility_check, laplace_eval

__all__ = [
    "UnimodularAssignment",
    "SteeringProblem",
    "RoundingResult",
    "CorrectionStep",
    "BlockResult",
    "ConstantsResult",
    "BasePhases",
    "SteeringReport",
    "unimodular_round",
    "correction_step",
    "steer_block",
    "steer_constants",
    "choose_base_phases",
    "steer_function",
    "UniversalitySteerer",
]

MIN_CORRECTION_N = 1000
DEFAULT_SLACK = 0.02
PHASE_GRID = 720
# per-block constant targets use this fraction of the admissible size
BLOCK_SAFETY = 0.96


def _as_sources(sources) -> tuple[CoefficientSource, ...]:
    if isinstance(sources, CoefficientSource):
        return (sources,)
    out = tuple(sources)
    if not out:
        raise ValueError("need at least one coefficient source")
    return out


def _coeff_matrix(sources, primes: np.ndarray) -> np.ndarray:
    return np.vstack([src.prime_values(primes) for src in sources])


def _as_pins(pins) -> UnimodularAssignment:
    if pins is None:
        return UnimodularAssignment()
    if isinstance(pins, UnimodularAssignment):
        return pins
    return UnimodularAssignment.from_mapping(dict(pins))


# --------------------------------------------------------------------------
# rounding


@dataclass(frozen=True, eq=False)
class RoundingResult:
    b: np.ndarray
    deviation: np.ndarray
    deviation_sq: float
    bound_sq: float


def unimodular_round(x, a, dev0=None) -> RoundingResult:
    """Round ``a`` to unit numbers ``b`` with ``||dev0 + sum (a_j - b_j) x_j||^2`` small.

    Rows of ``x`` are the vectors ``x_j``.  Each ``b_j`` minimizes the
    running deviation exactly, which is never worse than the choice used
    in the classical inductive argument, so the bound
    ``||dev0||^2 + 4 sum ||x_j||^2`` always holds; it is checked anyway.
    """
    X = _kernels.as_complex(x)
    if X.ndim == 1:
        X = X[:, None]
    a = _kernels.as_complex(a).ravel()
    if X.shape[0] != a.size:
        raise ValueError("need one coefficient per vector")
    if a.size and np.max(np.abs(a)) > 1.0 + 1e-12:
        raise ValueError("coefficients must satisfy |a_j| <= 1")
    d0 = np.zeros(X.shape[1], dtype=np.complex128) if dev0 is None else _kernels.as_complex(dev0).ravel()
    order = np.arange(a.size, dtype=np.int64)
    b, dev = _kernels.greedy_round(X, a, order, d0)
    dev_sq = float(np.sum(np.abs(dev) ** 2))
    bound_sq = float(np.sum(np.abs(d0) ** 2) + 4.0 * np.sum(np.abs(X) ** 2))
    if dev_sq > bound_sq * (1 + 1e-9) + 1e-300:
        raise RoundingError(f"rounding deviation^2 {dev_sq:.6e} exceeds bound {bound_sq:.6e}")
    return RoundingResult(b, dev, dev_sq, bound_sq)


# --------------------------------------------------------------------------
# one contraction step


@dataclass(frozen=True, eq=False)
class CorrectionStep:
    k: int
    B: float
    N: int
    N0: int
    primes: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    ratio: float
    required_ratio: float
    n0_exponent: float
    n0_bound_exponent: float
    v: np.ndarray = field(repr=False, default=None)

    @property
    def residual(self) -> np.ndarray:
        return self.v - self.w

    def as_dict(self) -> dict:
        return {
            "k": self.k, "B": self.B, "N": self.N, "N0": self.N0, "ratio": self.ratio,
            "required_ratio": self.required_ratio, "n0_exponent": self.n0_exponent,
            "n0_bound_exponent": self.n0_bound_exponent,
        }


def _step_constants(n: int, lam: float, Lam: float) -> float:
    return 2.0 * math.sqrt(n * Lam / lam)


def n0_bound_exponent(v, n: int, lam: float = 1.0, Lam: float = 1.0) -> float:
    """Exponent ``E`` with ``N_0 <= N^E`` for a correction step on ``v``."""
    vinf = float(np.max(np.abs(v)))
    return math.exp(2.0 / (1.0 - 1.0 / (8 * n)) * math.sqrt(n * Lam / lam**3) * vinf)


def _crossing(inc: np.ndarray, start: float, target: float) -> tuple[int, bool]:
    """Count of leading increments at the first local minimum of ``|target - running sum|``."""
    cum = start + np.cumsum(inc)
    j = int(np.searchsorted(cum, target, side="left"))
    if j >= cum.size:
        return cum.size, False
    before = target - (start if j == 0 else cum[j - 1])
    after = cum[j] - target
    return (j + 1, True) if after < before else (j, True)


def correction_step(
    v,
    sources,
    N: int,
    *,
    lam: float = 1.0,
    Lam: float = 1.0,
    slack: float = DEFAULT_SLACK,
    min_N: int = MIN_CORRECTION_N,
    prime_limit: int | None = None,
    check: bool = True,
) -> CorrectionStep:
    """One greedy step reducing ``||v||_2`` with coefficients ``|d_p| <= 1`` from ``p >= N``.

    The largest component ``v_k`` (lowest index on ties) is driven to zero
    with ``d_p = e^{i arg v_k} conj(c_k(p)) / B``; ``N_0`` is the first
    local minimum of the running residual of that component.
    """
    sources = _as_sources(sources)
    v = _kernels.as_complex(v).ravel()
    n = len(sources)
    if v.size != n:
        raise ValueError("v needs one component per source")
    if not np.any(v):
        raise ValueError("v must be nonzero")
    if N < min_N:
        raise ValueError(f"N = {N} is below the configured minimum {min_N}")
    limit = prime_limit or get_default_ceiling()
    k = int(np.argmax(np.abs(v)))
    B = _step_constants(n, lam, Lam)
    phase = v[k] / abs(v[k])
    target = abs(v[k])
    running = 0.0
    taken_p, taken_d = [], []
    N0 = None
    for seg in iter_prime_segments(N, limit + 1):
        ck = sources[k].prime_values(seg)
        small = np.abs(ck) <= B
        inc = np.where(small, np.abs(ck) ** 2, 0.0) / (B * seg)
        count, crossed = _crossing(inc, running, target)
        taken_p.append(seg[:count])
        taken_d.append(np.where(small[:count], phase * np.conj(ck[:count]) / B, 0.0))
        running += float(np.sum(inc[:count]))
        if crossed:
            N0 = int(seg[count]) if count < seg.size else int(seg[-1]) + 1
            break
    primes = np.concatenate(taken_p) if taken_p else np.zeros(0, dtype=np.int64)
    d = np.concatenate(taken_d) if taken_d else np.zeros(0, dtype=np.complex128)
    if primes.size:
        w = (_coeff_matrix(sources, primes) * (d / primes)).sum(axis=1)
    else:
        w = np.zeros(n, dtype=np.complex128)
    ratio = float(np.linalg.norm(v - w) / np.linalg.norm(v))
    required = 1.0 - 1.0 / (4 * n) + slack
    if N0 is None:
        if check:
            raise ContractionError(ratio, required, N)
        N0 = limit + 1
    step = CorrectionStep(
        k=k, B=B, N=int(N), N0=int(N0), primes=primes, d=d, w=w, ratio=ratio,
        required_ratio=required, n0_exponent=math.log(N0) / math.log(N),
        n0_bound_exponent=n0_bound_exponent(v, n, lam, Lam), v=v,
    )
    if check and ratio > required:
        raise ContractionError(ratio, required, N)
    return step


# --------------------------------------------------------------------------
# block steering


@dataclass(frozen=True, eq=False)
class BlockResult:
    P: int
    upper: int
    xi: float
    b: np.ndarray
    primes: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    sums: np.ndarray = field(repr=False)
    error: float
    steps: tuple = ()
    stop_reason: str = ""
    reached: int = 0
    rounding: RoundingResult | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "P": self.P, "upper": self.upper, "xi": self.xi, "error": self.error,
            "b": [[z.real, z.imag] for z in self.b.tolist()],
            "sums": [[z.real, z.imag] for z in self.sums.tolist()],
            "steps": list(self.steps), "stop_reason": self.stop_reason,
            "reached": self.reached, "primes": int(self.primes.size),
        }


def steer_block(
    b,
    sources,
    P: int,
    xi: float,
    eps: float,
    *,
    lam: float = 1.0,
    Lam: float = 1.0,
    upper: int | None = None,
    slack: float = DEFAULT_SLACK,
    max_steps: int = 200,
    check_admissible: bool = True,
) -> BlockResult:
    """Unimodular ``omega`` on ``[P, upper)`` with ``(1/log(1+xi)) sum omega c_k / p`` near ``b_k``.

    Correction steps run until the residual is at most
    ``eps log(1+xi) / (2 sqrt n)``, or until a step stops contracting or the
    block runs out of primes; the remainder is handed to the rounding as an
    offset.  The achieved error is recomputed and must be below ``eps``.
    """
    sources = _as_sources(sources)
    n = len(sources)
    b = _kernels.as_complex(b).ravel()
    if b.size != n:
        raise ValueError("b needs one component per source")
    bound = admissibility_bound(n, lam, Lam)
    if check_admissible and np.max(np.abs(b)) > bound * (1 + 1e-12):
        raise AdmissibilityError(
            f"max |b_k| = {np.max(np.abs(b)):.6g} exceeds (1/8) sqrt(lam^3/(n^3 Lam)) = {bound:.6g}"
        )
    upper = _int_power(P, 1.0 + xi) if upper is None else int(upper)
    L = math.log1p(xi)
    primes = sieve_range(P, upper) if upper > P else np.zeros(0, dtype=np.int64)
    C = _coeff_matrix(sources, primes)
    invp = 1.0 / primes.astype(np.float64)
    X = np.ascontiguousarray((C * invp).T)
    if primes.size == 0 or not np.any(C):
        sums = np.zeros(n, dtype=np.complex128)
        err = float(np.max(np.abs(b)))
        omega = np.ones(primes.size, dtype=np.complex128)
        if err >= eps:
            raise SteeringError(f"block [{P}, {upper}) carries no coefficient mass")
        return BlockResult(P, upper, xi, b, primes, omega, sums, err, (), "empty-block", P)
    v0 = L * b
    r = v0.copy()
    d = np.zeros(primes.size, dtype=np.complex128)
    B = _step_constants(n, lam, Lam)
    goal = eps * L / (2 * math.sqrt(n))
    required = 1.0 - 1.0 / (4 * n) + slack
    idx = 0
    steps = []
    reason = "converged"
    while np.linalg.norm(r) > goal:
        if len(steps) >= max_steps:
            reason = "max-steps"
            break
        k = int(np.argmax(np.abs(r)))
        ck = C[k, idx:]
        small = np.abs(ck) <= B
        inc = np.where(small, np.abs(ck) ** 2, 0.0) * invp[idx:] / B
        count, crossed = _crossing(inc, 0.0, abs(r[k]))
        if not crossed:
            reason = "block-budget"
        if count == 0:
            reason = "granularity" if crossed else reason
            break
        seg = np.where(small[:count], (r[k] / abs(r[k])) * np.conj(ck[:count]) / B, 0.0)
        w = seg @ X[idx : idx + count]
        ratio = float(np.linalg.norm(r - w) / np.linalg.norm(r))
        if ratio > required:
            reason = "contraction-stall"
            break
        d[idx : idx + count] = seg
        r = r - w
        idx += count
        steps.append({"k": k, "N": int(primes[idx - count]), "count": int(count), "ratio": ratio})
        if not crossed:
            break
    reached = int(primes[idx]) if idx < primes.size else upper
    rounding = unimodular_round(X, d, r)
    omega = rounding.b
    sums = (omega * invp) @ C.T
    err = float(np.max(np.abs(sums / L - b)))
    if err >= eps:
        raise SteeringError(
            f"block [{P}, {upper}) error {err:.4g} >= eps {eps:.4g} (stopped by {reason})"
        )
    return BlockResult(P, upper, xi, b, primes, omega, sums, err, tuple(steps), reason, reached, rounding)


# --------------------------------------------------------------------------
# base phases and constants


@dataclass(frozen=True, eq=False)
class BasePhases:
    omega: UnimodularAssignment
    windows: tuple
    tails: np.ndarray = field(repr=False)
    budget: float
    sigma: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "seed": self.omega.seed,
            "default_rule": self.omega.default_rule,
            "sigma": self.sigma,
            "budget": self.budget,
            "passed": self.passed,
            "windows": [list(w) for w in self.windows],
            "tails": self.tails.tolist(),
        }


def choose_base_phases(
    seed: int,
    sources,
    *,
    pins=None,
    eps: float = 0.05,
    sigma: float = 1.0,
    start: int = 2**16,
    stop: int = 2**24,
    rule: str = "random",
    check: bool = True,
) -> BasePhases:
    """Seeded base phases plus Cauchy-tail evidence over doubling windows.

    ``tails[i, k] = |sum_{W_i <= p < stop} omega(p) c_k(p) p^-sigma|`` with
    ``W_i = start 2^i``; all must stay below ``eps / 9``.
    """
    sources = _as_sources(sources)
    pins = _as_pins(pins)
    omega = pins.with_default(rule, seed if rule == "random" else None)
    edges = [start]
    while edges[-1] < stop:
        edges.append(min(2 * edges[-1], stop))
    windows = list(zip(edges[:-1], edges[1:]))
    sums = np.zeros((len(windows), len(sources)), dtype=np.complex128)
    for i, (lo, hi) in enumerate(windows):
        for k, src in enumerate(sources):
            sums[i, k] = prime_grid_sums(src, omega, np.array([sigma + 0j]), lo, hi)[0]
    tails = np.abs(np.cumsum(sums[::-1], axis=0)[::-1])
    budget = eps / 9.0
    passed = bool(np.all(tails < budget))
    if check and not passed:
        raise BasePhaseDivergenceError(
            f"base tail {np.max(tails):.4g} exceeds eps/9 = {budget:.4g}; try another seed"
        )
    return BasePhases(omega, tuple(windows), tails, budget, float(sigma), passed)


@dataclass(frozen=True, eq=False)
class ConstantsResult:
    omega: UnimodularAssignment
    P: int
    achieved: np.ndarray
    base_sums: np.ndarray
    n_blocks: int
    blocks: tuple
    error: float

    def as_dict(self) -> dict:
        return {
            "P": self.P, "n_blocks": self.n_blocks, "error": self.error,
            "achieved": [[z.real, z.imag] for z in self.achieved.tolist()],
            "base_sums": [[z.real, z.imag] for z in self.base_sums.tolist()],
            "blocks": [blk.as_dict() for blk in self.blocks],
        }


def _prefix_sums(sources, omega, P: int) -> np.ndarray:
    return np.array([prime_grid_sums(src, omega, np.array([1.0 + 0j]), 2, P)[0] for src in sources])


def _phase_fit(H: np.ndarray, target: np.ndarray, seed: int, restarts: int, sweeps: int = 60):
    """Coordinate phase rounding with seeded restarts; returns (indices, total, sup residual)."""
    G, Pn, Q = H.shape
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        k0 = np.zeros(Pn, dtype=np.int64) if r == 0 else rng.integers(0, Q, Pn).astype(np.int64)
        total, _ = _kernels.grid_round_sweep(H, target, k0, sweeps)
        sup = float(np.max(np.abs(target - total))) if G else 0.0
        if best is None or sup < best[2]:
            best = (k0.copy(), total, sup)
    return best


def steer_constants(
    C,
    sources,
    eps: float,
    *,
    pins=None,
    P: int = 1000,
    seed: int = 0,
    lam: float = 1.0,
    Lam: float = 1.0,
    max_blocks: int = 8,
    prime_limit: int | None = None,
    prefix_fit: bool = True,
    restarts: int = 8,
) -> ConstantsResult:
    """Twist with ``|sum_{p < P_out} omega(p) c_k(p)/p - C_k| < eps``.

    Base phases cover ``p < P`` (pins kept).  With ``prefix_fit`` the free
    primes below ``P`` are first re-phased toward ``C``.  What remains,
    ``C - D``, is split evenly over doubling blocks ``[Q, Q^2)``,
    ``Q = P^(2^j)``, each steered by :func:`steer_block` with ``xi = 1``.
    """
    sources = _as_sources(sources)
    n = len(sources)
    C = _kernels.as_complex(C).ravel()
    if C.size != n:
        raise ValueError("need one constant per source")
    pins = _as_pins(pins)
    limit = prime_limit or get_default_ceiling()
    top_pin = int(pins.pinned_primes[-1]) if len(pins) else 0
    if P <= top_pin:
        raise ValueError(f"P = {P} must exceed the largest pinned prime {top_pin}")
    omega = pins.with_default("random", seed)
    D = _prefix_sums(sources, omega, P)
    if prefix_fit and np.max(np.abs(C - D)) >= eps / 2:
        free = sieve_range(2, P)
        free = free[~np.isin(free, pins.pinned_primes)]
        if free.size:
            phases = np.exp(2j * np.pi * np.arange(PHASE_GRID) / PHASE_GRID)
            X = _coeff_matrix(sources, free) / free
            H = np.ascontiguousarray(X[:, :, None] * phases[None, None, :])
            fixed = D - (X * omega.values(free)).sum(axis=1)
            kbest, _, _ = _phase_fit(H, C - fixed, seed, restarts)
            omega = omega.with_pins(free, phases[kbest])
            D = _prefix_sums(sources, omega, P)
    R = C - D
    cap = BLOCK_SAFETY * math.log(2) * admissibility_bound(n, lam, Lam)
    n_blocks = 0 if np.max(np.abs(R)) < eps / 2 else math.ceil(np.max(np.abs(R)) / cap)
    if n_blocks > max_blocks:
        raise AdmissibilityError(f"{n_blocks} constant blocks needed; the cap is {max_blocks}")
    if n_blocks and math.log(P) * 2**n_blocks > math.log(limit + 1):
        raise AdmissibilityError(
            f"{n_blocks} doubling blocks from P={P} pass the prime limit {limit}"
        )
    blocks = []
    Q = P
    for _ in range(n_blocks):
        blk = steer_block(
            R / (n_blocks * math.log(2)), sources, Q, 1.0, eps / (2 * n_blocks * math.log(2)),
            lam=lam, Lam=Lam, upper=Q * Q,
        )
        blocks.append(blk)
        omega = omega.with_pins(blk.primes, blk.omega)
        Q = Q * Q
    P_out = Q
    achieved = _prefix_sums(sources, omega, P_out)
    err = float(np.max(np.abs(achieved - C)))
    if err >= eps:
        raise SteeringError(f"constant steering error {err:.4g} >= eps {eps:.4g}")
    return ConstantsResult(omega, P_out, achieved, D, n_blocks, tuple(blocks), err)


# --------------------------------------------------------------------------
# the full construction


@dataclass(frozen=True, eq=False)
class SteeringProblem:
    """Inputs of the steering construction.

    ``mode="log"`` steers ``sum_p log F_p(1 + delta s, omega)`` (the log of
    the twisted Euler product); ``mode="linear"`` steers the plain prime sum.
    """

    sources: tuple
    targets: tuple
    K: CompactDomain
    delta: float
    eps: float
    lam: float = 1.0
    Lam: float = 1.0
    pins: dict = field(default_factory=dict)
    M: int = 4
    seed: int = 0
    mode: str = "log"
    prime_limit: int = 10**8
    slack: float = DEFAULT_SLACK
    restarts: int = 16
    orthogonality: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", _as_sources(self.sources))
        targets = self.targets
        if isinstance(targets, LaplaceTarget):
            targets = (targets,)
        object.__setattr__(self, "targets", tuple(targets))
        object.__setattr__(self, "pins", {int(p): complex(v) for p, v in dict(self.pins).items()})
        if len(self.targets) != len(self.sources):
            raise ValueError("need one target per source")
        if self.delta <= 0 or self.eps <= 0:
            raise ValueError("delta and eps must be positive")
        if self.mode not in ("log", "linear"):
            raise ValueError("mode must be 'log' or 'linear'")
        if self.delta * self.K.max_abs >= 1:
            raise ValueError(f"delta * max|s| = {self.delta * self.K.max_abs:.4g} must be < 1")
        for p, a in self.pins.items():
            if abs(abs(a) - 1.0) > 1e-12:
                raise ValueError(f"pin a_{p} = {a} is not unimodular")

    @property
    def n(self) -> int:
        return len(self.sources)

    @property
    def grid(self) -> np.ndarray:
        """Evaluation points ``1 + delta s`` for ``s`` on the grid of ``K``."""
        return 1.0 + self.delta * self.K.points

    def target_values(self) -> np.ndarray:
        return np.vstack([laplace_eval(t, self.K.points) for t in self.targets])

    def validate(self) -> None:
        for k, t in enumerate(self.targets):
            res = admissibility_check(t, self.n, self.lam, self.Lam)
            if not res.passed:
                raise AdmissibilityError(
                    f"target {k}: sup|x g(x)| = {res.sup_xg:.6g} exceeds the admissible bound "
                    f"(1/8) sqrt(lambda^3/(n^3 Lambda)) = {res.bound:.6g}"
                )

    def schedule(self) -> dict:
        B = max(t.B for t in self.targets)
        P2 = math.exp(B / (self.M * self.delta))
        P3 = math.exp(B * (self.M + 1) / (self.M * self.delta))
        return {"B": B, "M": self.M, "P2": P2, "P3": P3}

    def describe(self) -> dict:
        return {
            "sources": [s.describe() for s in self.sources],
            "targets": [t.describe() for t in self.targets],
            "K": self.K.describe(),
            "delta": self.delta, "eps": self.eps, "lambda": self.lam, "Lambda": self.Lam,
            "pins": {str(p): [a.real, a.imag] for p, a in sorted(self.pins.items())},
            "M": self.M, "seed": self.seed, "mode": self.mode,
            "prime_limit": self.prime_limit, "slack": self.slack, "restarts": self.restarts,
        }


@dataclass(frozen=True, eq=False)
class SteeringReport:
    omega: UnimodularAssignment
    error: float
    errors: tuple
    ledger: dict
    schedule: dict
    bands: tuple
    passed: bool

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "error": self.error,
            "errors": list(self.errors),
            "ledger": self.ledger,
            "schedule": self.schedule,
            "bands": [b.as_dict() for b in self.bands],
            "pinned_primes": len(self.omega),
            "default_rule": self.omega.default_rule,
            "seed": self.omega.seed,
        }


def _summand_table(sources, primes, s_grid, phases, mode) -> np.ndarray:
    """``H[(k, g), j, q]`` = contribution of prime ``j`` with phase ``q`` at grid point ``g``."""
    X = _coeff_matrix(sources, primes)  # n x P
    ps = np.power.outer(primes.astype(np.float64), -s_grid)  # P x G
    z = X[:, None, :, None] * ps.T[None, :, :, None] * phases[None, None, None, :]
    if mode == "log":
        if np.max(np.abs(z)) >= 1:
            j = int(np.unravel_index(np.argmax(np.abs(z)), z.shape)[2])
            raise VanishingLocalFactorError(int(primes[j]), s_grid[0], "|z| >= 1 in phase table")
        z = -np.log1p(-z)
    n, G = X.shape[0], s_grid.size
    return np.ascontiguousarray(z.reshape(n * G, primes.size, phases.size))


def _grid_sums(sources, omega, s_grid, lo, hi, mode) -> np.ndarray:
    if hi <= lo:
        return np.zeros((len(sources), s_grid.size), dtype=np.complex128)
    kind = "log" if mode == "log" else "linear"
    return np.vstack([prime_grid_sums(src, omega, s_grid, lo, hi, kind) for src in sources])


def _ledger_item(value: float, threshold: float, note: str = "") -> dict:
    item = {"value": float(value), "threshold": float(threshold), "within": bool(value < threshold)}
    if note:
        item["note"] = note
    return item


def steer_function(problem: SteeringProblem) -> SteeringReport:
    """Build ``omega`` so that ``sum_p`` over the twisted terms tracks ``f_k`` on ``K``.

    Schedule: ``P2 = exp(B/(M delta))``, ``P3 = exp(B(M+1)/(M delta))``; band
    ``m`` is ``[P2^m, P2^(m+1))`` with ``xi = 1/m`` and block target
    ``g_k(mB/M) B/M``.  Base phases cover ``p >= P3``.  The free primes
    below ``P2`` are phase-fitted to whatever the rest leaves over (this
    replaces the constant stage, which has no room below ``P2`` here).
    """
    problem.validate()
    sources, n, eps, delta = problem.sources, problem.n, problem.eps, problem.delta
    sched = problem.schedule()
    B, M, P2, P3 = sched["B"], sched["M"], sched["P2"], sched["P3"]
    limit = problem.prime_limit
    if P3 > limit or P3 > get_default_ceiling():
        raise ScheduleOverflowError(
            f"P3 = exp(B(M+1)/(M delta)) = {P3:.4g} exceeds the prime limit {limit}; "
            "increase delta or decrease B"
        )
    P1 = math.ceil(P2)
    pins = _as_pins(problem.pins)
    if len(pins) and int(pins.pinned_primes[-1]) >= P1:
        raise ScheduleOverflowError(f"pins reach P2 = {P2:.4g}; decrease delta")
    base = choose_base_phases(problem.seed, sources, pins=pins, eps=eps,
                              sigma=1.0 + delta * problem.K.xi_min, check=False)
    omega = base.omega
    s_grid = problem.grid
    G = s_grid.size
    f = problem.target_values()

    # bands m = 1..M
    bands = []
    for m in range(1, M + 1):
        lo = math.ceil(P2**m)
        hi = math.ceil(P3) if m == M else math.ceil(P2 ** (m + 1))
        xi = 1.0 / m
        node = m * B / M
        b = np.array([complex(t.g(node)) for t in problem.targets]) * (B / M) / math.log1p(xi)
        blk = steer_block(b, sources, lo, xi, eps / (9 * M * math.log1p(xi)),
                          lam=problem.lam, Lam=problem.Lam, upper=hi, slack=problem.slack)
        bands.append(blk)
        omega = omega.with_pins(blk.primes, blk.omega)

    # everything from P1 up is now fixed
    mode = problem.mode
    big = _grid_sums(sources, omega, s_grid, P1, limit + 1, mode)
    small_primes = sieve_range(2, P1)
    free = small_primes[~np.isin(small_primes, pins.pinned_primes)]
    fixed_small = small_primes[np.isin(small_primes, pins.pinned_primes)]
    pinned = np.zeros((n, G), dtype=np.complex128)
    if fixed_small.size:
        for j, p in enumerate(fixed_small.tolist()):
            pinned += _grid_sums(sources, omega, s_grid, p, p + 1, mode)
    residual_target = f - big - pinned
    fit_total = np.zeros((n, G), dtype=np.complex128)
    if free.size:
        phases = np.exp(2j * np.pi * np.arange(PHASE_GRID) / PHASE_GRID)
        H = _summand_table(sources, free, s_grid, phases, mode)
        kbest, total, _ = _phase_fit(H, residual_target.ravel(), problem.seed, problem.restarts)
        omega = omega.with_pins(free, phases[kbest])
        fit_total = total.reshape(n, G)
    achieved = big + pinned + fit_total
    errs = np.max(np.abs(achieved - f), axis=1)
    error = float(np.max(errs))

    ledger = _steering_ledger(problem, omega, base, bands, f, sched, P1)
    ledger["fit_residual"] = _ledger_item(error, eps, "sup over the grid of the assembled sum minus f")
    return SteeringReport(omega, error, tuple(float(e) for e in errs), ledger,
                          {**sched, "P1": P1, "prime_limit": limit}, tuple(bands), error < eps)


def _steering_ledger(problem, omega, base, bands, f, sched, P1) -> dict:
    """Measured values of the nine-way budget items (linear prime sums)."""
    sources, eps, delta = problem.sources, problem.eps, problem.delta
    B, M, P2, P3 = sched["B"], sched["M"], sched["P2"], sched["P3"]
    s_grid = problem.grid
    s = problem.K.points
    ninth = eps / 9.0
    limit = problem.prime_limit
    Cs = np.array([t.C for t in problem.targets])
    lin_small = _grid_sums(sources, omega, np.array([1.0 + 0j]), 2, P1, "linear")[:, 0]
    iia0 = float(np.max(np.abs(lin_small - Cs)))
    # sum_{p<P1} |omega c/p - omega c/p^{1+delta s}|
    ps = sieve_range(2, P1).astype(np.float64)
    X = np.abs(_coeff_matrix(sources, ps.astype(np.int64)))
    diff = np.abs(1.0 / ps[:, None] - np.power.outer(ps, -s_grid))
    uio = float(np.max(X @ diff))
    riemann = np.zeros((len(sources), s.size), dtype=np.complex128)
    integral = np.zeros_like(riemann)
    for k, t in enumerate(problem.targets):
        nodes = np.arange(1, M + 1) * B / M
        riemann[k] = np.exp(-np.multiply.outer(s, nodes)) @ (t.g(nodes) * (B / M))
        integral[k] = laplace_eval(t, s) - t.C
    ia1 = float(np.max(np.abs(riemann - integral)))
    ia3 = max(float(np.max(np.abs(blk.sums - blk.b * math.log1p(blk.xi)))) for blk in bands)
    ia3a = 0.0
    for m, blk in enumerate(bands, 1):
        if blk.primes.size == 0:
            continue
        acc = np.zeros((len(sources), s.size))
        node = np.exp(-s * m * B / M)[None, :]
        for lo in range(0, blk.primes.size, 1 << 16):
            ps_blk = blk.primes[lo : lo + (1 << 16)]
            lp = np.log(ps_blk.astype(np.float64))
            mag = np.abs(_coeff_matrix(sources, ps_blk)) / ps_blk
            acc += mag @ np.abs(np.exp(-delta * np.multiply.outer(lp, s)) - node)
        ia3a += float(np.max(acc))
    band_sum = _grid_sums(sources, omega, s_grid, math.ceil(P2), math.ceil(P3), "linear")
    ia4 = float(np.max(np.abs(band_sum - (f - Cs[:, None]))))
    mid = _grid_sums(sources, omega, s_grid, P1, math.ceil(P2), "linear")
    tail = _grid_sums(sources, omega, s_grid, math.ceil(P3), limit + 1, "linear")
    ia5_mid = float(np.max(np.abs(mid)))
    ia5_tail = float(np.max(np.abs(tail)))
    return {
        "oo3": _ledger_item(float(np.max(base.tails)), ninth, "base-phase Cauchy tails"),
        "iia0": _ledger_item(iia0, ninth, "constant stage at s=0 against C_k"),
        "uio": _ledger_item(uio, ninth),
        "ia1": _ledger_item(ia1, ninth, "Riemann sum vs quadrature integral"),
        "ia3": _ledger_item(ia3, ninth / M, "worst band, unnormalized"),
        "ia3a": _ledger_item(ia3a, ninth),
        "ia4": _ledger_item(ia4, 3 * ninth),
        "ia5_mid": _ledger_item(ia5_mid, 2 * ninth, "primes in [P1, P2)"),
        "ia5_tail": _ledger_item(ia5_tail, ninth, "primes in [P3, limit)"),
    }


class UniversalitySteerer(BaseEstimator):
    """Estimator wrapper around :func:`steer_function`.

    ``fit`` takes ``(sources, targets, K)``; ``predict`` returns the steered
    sums at ``1 + delta s`` for grid points ``s``, shape ``(n, len(s))``.
    """

    def __init__(self, delta=0.07, eps=0.05, M=4, seed=0, mode="log", prime_limit=10**8,
                 lam=1.0, Lam=1.0, restarts=16):
        self.delta = delta
        self.eps = eps
        self.M = M
        self.seed = seed
        self.mode = mode
        self.prime_limit = prime_limit
        self.lam = lam
        self.Lam = Lam
        self.restarts = restarts

    def fit(self, sources, targets, K, pins=None):
        problem = SteeringProblem(
            sources, targets, K, self.delta, self.eps, lam=self.lam, Lam=self.Lam,
            pins=pins or {}, M=self.M, seed=self.seed, mode=self.mode,
            prime_limit=self.prime_limit, restarts=self.restarts,
        )
        self.problem_ = problem
        self.report_ = steer_function(problem)
        self.omega_ = self.report_.omega
        return self

    def predict(self, s):
        s_grid = 1.0 + self.delta * np.atleast_1d(np.asarray(s, dtype=np.complex128))
        return _grid_sums(self.problem_.sources, self.omega_, s_grid, 2, self.prime_limit + 1, self.mode)
