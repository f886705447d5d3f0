"""Verification of hybrid approximation, reduction planning, linear combinations and zero search."""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .assignment import UnimodularAssignment
from .exceptions import ContourZeroError, DegenerateMultiplierError, NonConvergenceError
from .primes import sieve_range
from .series import (
    CoefficientSource,
    Estimate,
    StandardTypeSeries,
    _as_series,
    evaluate_dirichlet,
    prime_grid_sums,
)
from .steering import SteeringProblem
from .targets import CompactDomain, LaplaceTarget, admissibility_bound, laplace_eval

__all__ = [
    "VerificationReport",
    "Theorem1Plan",
    "WindingResult",
    "Tile",
    "ZeroHuntResult",
    "verify_hybrid",
    "plan_theorem1",
    "combo_nullspace",
    "linear_combination_eval",
    "dirichlet_function",
    "winding_number",
    "zero_hunt",
    "write_tiles_csv",
]


def _item(value: float, threshold: float | None, gating: bool, note: str = "") -> dict:
    out = {"value": float(value), "threshold": None if threshold is None else float(threshold),
           "gating": gating}
    out["within"] = None if threshold is None else bool(value < threshold)
    if note:
        out["note"] = note
    return out


@dataclass(frozen=True, eq=False)
class VerificationReport:
    mode: str
    errors: tuple
    sup_error: float
    pin_deviation: float | None
    ledger: dict
    passed: bool
    log_values: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "sup_error": self.sup_error,
            "errors": list(self.errors),
            "pin_deviation": self.pin_deviation,
            "ledger": self.ledger,
        }


def _random_tail_rms(src: CoefficientSource, X: int, sigma: float) -> float:
    """rms of ``sum_{p > X} omega(p) c(p) p^-sigma`` for independent uniform phases."""
    return src.majorant * math.sqrt(X ** (1 - 2 * sigma) / ((2 * sigma - 1) * math.log(X)))


def _det_tail_bound(src: CoefficientSource, X: int, sigma: float) -> float:
    if src.majorant == 0:
        return 0.0
    return src.majorant * X ** (1 - sigma) / (sigma - 1)


def verify_hybrid(
    problem: SteeringProblem,
    omega: UnimodularAssignment | None = None,
    t: float | None = None,
    *,
    target_values=None,
    prime_limit: int | None = None,
    N1: int = 1000,
) -> VerificationReport:
    """Sup-grid check of ``|log L_k(1 + it + delta s) - f_k(s)|`` on ``K``.

    With ``omega`` (omega-mode) the log is ``sum omega c p^-s`` minus the
    tail-factor log; with ``t`` (t-mode) it is the sum of local logs at the
    shifted points, and the pins are checked against ``p^{it}``.  When both
    are given, omega-mode is gated and the transfer between them on
    ``p < N1`` is reported as an extra item (quarter budget).
    """
    if omega is None and t is None:
        raise ValueError("give omega, t, or both")
    limit = prime_limit or problem.prime_limit
    eps = problem.eps
    s_grid = problem.grid
    f = problem.target_values() if target_values is None else np.asarray(target_values, dtype=np.complex128)
    f = f.reshape(problem.n, -1)
    sigma_min = 1.0 + problem.delta * problem.K.xi_min
    ledger: dict = {}
    logL = np.zeros_like(f)
    if omega is not None:
        mode = "omega"
        for k, src in enumerate(problem.sources):
            lin = prime_grid_sums(src, omega, s_grid, 2, limit + 1, "linear")
            dft = prime_grid_sums(src, omega, s_grid, 2, limit + 1, "defect")
            logL[k] = lin - dft
        tail = max(
            (_random_tail_rms(src, limit, sigma_min) if omega.default_rule == "random"
             else _det_tail_bound(src, limit, sigma_min))
            for src in problem.sources
        )
        ledger["truncation"] = _item(tail, None, False,
                                     "rms estimate beyond the prime limit" if omega.default_rule == "random"
                                     else "majorant bound beyond the prime limit")
    else:
        mode = "t"
        for k, src in enumerate(problem.sources):
            logL[k] = prime_grid_sums(src, None, s_grid + 1j * t, 2, limit + 1, "log")
        tail = max(_det_tail_bound(src, limit, sigma_min) for src in problem.sources)
        ledger["truncation"] = _item(tail, None, False, "majorant bound beyond the prime limit")
    errs = np.max(np.abs(logL - f), axis=1)
    sup = float(np.max(errs))
    ledger["sup_log_error"] = _item(sup, eps, True)
    # value-domain conversion |e^z - 1| <= 3|z|/2 for |z| <= 1/2
    z = logL - f
    value_err = float(np.max(np.abs(np.exp(logL) - np.exp(f))))
    value_bound = float(np.max(1.5 * np.abs(np.exp(f)) * np.abs(z))) if np.max(np.abs(z)) <= 0.5 else math.inf
    ledger["value_error"] = _item(value_err, value_bound, False, "bound 3/2 |e^f| |log L - f|")
    pin_dev = None
    if t is not None and problem.pins:
        ps = np.array(sorted(problem.pins), dtype=np.int64)
        a = np.array([problem.pins[int(p)] for p in ps])
        pin_dev = float(np.max(np.abs(np.exp(1j * t * np.log(ps.astype(float))) - a)))
        ledger["pin_deviation"] = _item(pin_dev, eps, True)
    if omega is not None and t is not None:
        small = sieve_range(2, N1)
        eps2 = float(np.max(np.abs(np.exp(-1j * t * np.log(small.astype(float))) - omega.values(small))))
        tra2 = 0.0
        for src in problem.sources:
            a = prime_grid_sums(src, omega, s_grid, 2, N1, "linear")
            b = prime_grid_sums(src, None, s_grid + 1j * t, 2, N1, "linear")
            tra2 = max(tra2, float(np.max(np.abs(a - b))))
        ledger["eps2"] = _item(eps2, None, False, "max_{p<N1} |p^{-it} - omega(p)|")
        ledger["tra2"] = _item(tra2, eps / 4, True, "omega-sum vs t-shifted sum on p < N1")
    passed = all(v["within"] for v in ledger.values() if v["gating"])
    return VerificationReport(mode, tuple(float(e) for e in errs), sup, pin_dev, ledger, passed, logL)


# --------------------------------------------------------------------------
# reduction of standard-type series to pure Euler targets


@dataclass(frozen=True, eq=False)
class Theorem1Plan:
    t0: float
    xi_prime: float
    offsets: tuple
    floors: tuple
    constants: tuple
    delta0: float
    checks: dict
    th3_targets: tuple = field(repr=False, default=())

    def as_dict(self) -> dict:
        cx = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "t0": self.t0, "xi_prime": self.xi_prime,
            "offsets": [cx(z) for z in self.offsets],
            "floors": list(self.floors),
            "constants": [cx(z) for z in self.constants],
            "delta0": self.delta0,
            "checks": self.checks,
            "th3_targets": [t.describe() for t in self.th3_targets],
        }


def constant_floor(sup_xg: float, n: int, lam: float = 1.0, Lam: float = 1.0) -> float:
    """``8 n^{3/2} Lambda^{1/2} lambda^{-3/2} max |x g(x)|``."""
    return 8.0 * n**1.5 * math.sqrt(Lam) * lam**-1.5 * sup_xg


def plan_theorem1(
    series: Sequence,
    g_targets: Sequence[LaplaceTarget],
    K: CompactDomain,
    eps: float,
    *,
    lam: float = 1.0,
    Lam: float = 1.0,
    t_window: tuple = (0.0, 100.0),
    scan_points: int = 20001,
    xi_min: float = 1e-3,
    constants=None,
) -> Theorem1Plan:
    """Reduce a standard-type instance to Laplace targets for the pure Euler parts.

    ``g_targets[k]`` carries the Laplace part ``G_k`` (its ``C`` is ignored).
    The multiplier scan picks the first ``t0`` maximizing
    ``min_k |L_{2,k}(1 + i t0)|``; constants default to twice the floor and
    are doubled until the log-expansion check holds.
    """
    series = [_as_series(s) for s in series]
    n = len(series)
    if n != len(g_targets):
        raise ValueError("need one g-target per series")
    ts = np.linspace(t_window[0], t_window[1], scan_points)
    mins = np.full(ts.size, np.inf)
    for ser in series:
        if not ser.multiplier:
            mins = np.minimum(mins, 1.0)
            continue
        vals = np.ones(ts.size, dtype=np.complex128)
        for m, b in enumerate(ser.multiplier, 2):
            vals += b * np.exp(-(1 + 1j * ts) * math.log(m))
        mins = np.minimum(mins, np.abs(vals))
    i0 = int(np.argmax(mins))
    t0, xi_p = float(ts[i0]), float(mins[i0])
    if xi_p < xi_min:
        raise DegenerateMultiplierError(f"best min_k |L2_k(1+it)| = {xi_p:.3e} below {xi_min:.3e}")
    s0 = 1 + 1j * t0
    offsets = tuple(-ser.additive_value(s0) for ser in series)
    floors = tuple(constant_floor(g.sup_xg, n, lam, Lam) for g in g_targets)
    s = K.points
    Cs = []
    ab11 = []
    rrra = []
    for k, g in enumerate(g_targets):
        G = laplace_eval(g, s) - g.C
        C = complex(constants[k]) if constants is not None else complex(2.0 * max(floors[k], 1e-12))
        for _ in range(80):
            ratio = G / C
            val = float(np.max(np.abs(ratio + np.log(1 - ratio)))) if np.max(np.abs(ratio)) < 1 else math.inf
            if val < eps / (8 * abs(C)) or constants is not None:
                break
            C *= 2
        Cs.append(C)
        ab11.append({"value": val, "threshold": eps / (8 * abs(C)), "within": bool(val < eps / (8 * abs(C)))})
        rrra.append(bool(np.max(np.abs(G - C)) <= 1.25 * abs(C)))
    # delta0: halve until the multiplier and additive parts are flat enough on K
    delta0 = min(1.0, 0.999 / K.max_abs)
    for _ in range(60):
        ok = True
        for ser, C in zip(series, Cs):
            sp = 1 + 1j * t0 + delta0 * s
            l2 = np.array([ser.multiplier_value(z) for z in sp])
            if np.max(np.abs(np.log(l2) - np.log(ser.multiplier_value(s0)))) >= eps / (8 * abs(C)):
                ok = False
            l3 = np.array([ser.additive_value(z) for z in sp])
            if np.max(np.abs(l3 - ser.additive_value(s0))) >= eps / 8:
                ok = False
        if ok:
            break
        delta0 /= 2
    floors_ok = [abs(C) >= fl for C, fl in zip(Cs, floors)]
    th3 = []
    for ser, g, C in zip(series, g_targets, Cs):
        # log(G - C) = log(-C) + log(1 - G/C) ~ log(-C) - G/C
        const = cmath.log(-C) - cmath.log(ser.multiplier_value(s0))
        th3.append(LaplaceTarget(const, g.A, g.B, -g.samples / C))
    bound = admissibility_bound(n, lam, Lam)
    checks = {
        "ab11": ab11,
        "modulus_5_4": rrra,
        "floor_met": floors_ok,
        "th3_admissible": [bool(t.sup_xg <= bound * (1 + 1e-9)) for t in th3],
    }
    return Theorem1Plan(t0, xi_p, offsets, floors, tuple(Cs), float(delta0), checks, tuple(th3))


# --------------------------------------------------------------------------
# linear combinations


def combo_nullspace(a) -> np.ndarray:
    """Nonzero ``b`` with ``sum b_k a_k = 0`` and ``max |b_k| = 1``."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    if a.size < 2:
        raise ValueError("need at least two coefficients")
    if np.any(a == 0):
        raise ValueError("all coefficients must be nonzero")
    b = 1.0 / a
    b[-1] = -(a.size - 1) / a[-1]
    b /= np.max(np.abs(b))
    return b


def linear_combination_eval(a, series: Sequence, s: complex, cutoff: int = 10**6, **kw) -> Estimate:
    """``sum_k a_k L_k(s)`` with the combined error radius."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    if a.size != len(series):
        raise ValueError("need one coefficient per series")
    value, err = 0j, 0.0
    for ak, ser in zip(a, series):
        est = evaluate_dirichlet(ser, s, cutoff, **kw)
        value += ak * est.value
        err += abs(ak) * est.error
    return Estimate(value, err)


def dirichlet_function(a, series: Sequence, cutoff: int = 1000) -> Callable:
    """Vectorized truncation of ``sum_k a_k L_k(s)`` with the integral tail for zeta-type parts.

    The remainder of each zeta-type part is at most ``|s'| cutoff^{-Re s} / Re s``.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    series = [_as_series(s) for s in series]
    coef = np.zeros(cutoff, dtype=np.complex128)
    tails = []
    for ak, ser in zip(a, series):
        if ak == 0:
            continue
        if ser.multiplier:
            raise ValueError("multiplier parts are not supported by the truncated evaluator")
        c = ser.euler_part.dirichlet_coefficients(cutoff)[1:]
        coef += ak * c
        d = np.zeros(cutoff, dtype=np.complex128)
        d[: len(ser.additive)] = ser.additive[:cutoff]
        coef += ak * d
        shift = ser.euler_part.mean_shift
        if shift is not None:
            tails.append((ak, shift))
    logn = np.log(np.arange(1, cutoff + 1, dtype=np.float64))

    def fn(s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
        flat = np.ascontiguousarray(s_arr.ravel())
        out = _kernels.prime_sums_grid(coef, logn, flat)
        for ak, shift in tails:
            s1 = flat + 1j * shift
            out = out + ak * cutoff ** (1 - s1) / (s1 - 1)
        out = out.reshape(s_arr.shape)
        return complex(out.ravel()[0]) if np.ndim(s) == 0 else out

    fn.coefficients = coef
    fn.tails = tuple(tails)
    fn.cutoff = cutoff
    fn.error_bound = lambda s: sum(abs(ak) * abs(s + 1j * sh) * cutoff ** (-s.real) / s.real for ak, sh in tails)
    return fn


# --------------------------------------------------------------------------
# argument principle


@dataclass(frozen=True)
class WindingResult:
    winding: int
    residual: float
    raw: complex
    points: int
    min_modulus: float


def _vectorized(fn):
    def call(s):
        try:
            out = np.asarray(fn(s), dtype=np.complex128)
            if out.shape == s.shape:
                return out
        except TypeError:
            pass
        return np.array([complex(fn(complex(z))) for z in s.ravel()]).reshape(s.shape)

    return call


def _contour_integral(f, rect, n: int, h: float):
    re_lo, re_hi, im_lo, im_hi = rect
    corners = [complex(re_lo, im_lo), complex(re_hi, im_lo), complex(re_hi, im_hi), complex(re_lo, im_hi)]
    total = 0j
    min_mod, max_mod = math.inf, 0.0
    u = np.linspace(0.0, 1.0, n + 1)
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    for z0, z1 in zip(corners, corners[1:] + corners[:1]):
        s = z0 + u * (z1 - z0)
        fv = f(s)
        dv = (f(s + h) - f(s - h)) / (2 * h)
        mod = np.abs(fv)
        min_mod, max_mod = min(min_mod, float(mod.min())), max(max_mod, float(mod.max()))
        where = s[int(np.argmin(mod))]
        if min_mod <= 0.0:
            return None, min_mod, max_mod, where
        total += np.sum(w * dv / fv) * (z1 - z0)
    return total / (2j * math.pi), min_mod, max_mod, where


def winding_number(
    fn: Callable,
    rect: tuple,
    *,
    n0: int = 32,
    max_doublings: int = 10,
    zero_tol: float = 1e-9,
    step_rel: float = 1e-6,
) -> WindingResult:
    """Zero count of ``fn`` inside ``rect = (re_lo, re_hi, im_lo, im_hi)`` by the argument principle.

    Trapezoid rule on each side with central-difference derivatives.  The
    point count doubles until two successive levels round to the same
    integer with residual below 0.25.
    """
    re_lo, re_hi, im_lo, im_hi = map(float, rect)
    if not (re_lo < re_hi and im_lo < im_hi):
        raise ValueError("degenerate rectangle")
    f = _vectorized(fn)
    h = step_rel * max(re_hi - re_lo, im_hi - im_lo)
    prev = None
    n = n0
    for _ in range(max_doublings + 1):
        w, mn, mx, where = _contour_integral(f, (re_lo, re_hi, im_lo, im_hi), n, h)
        if w is None or mn <= zero_tol * max(mx, 1e-300) or mx == 0.0:
            raise ContourZeroError(mn, where)
        k = int(round(w.real))
        res = abs(w - k)
        if prev is not None and res < 0.25 and k == prev[0] and abs(w - prev[1]) < 0.25:
            return WindingResult(k, float(res), complex(w), 4 * n, float(mn))
        prev = (k, w)
        n *= 2
    raise NonConvergenceError(f"winding number not stable after {max_doublings} doublings")


# --------------------------------------------------------------------------
# zero hunt


@dataclass(frozen=True)
class Tile:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float
    winding: int
    residual: float
    certified: bool = False

    def row(self) -> list:
        return [repr(self.re_lo), repr(self.re_hi), repr(self.im_lo), repr(self.im_hi),
                str(self.winding), repr(self.residual)]


@dataclass(frozen=True)
class ZeroHuntResult:
    hits: tuple
    candidates: int
    cells: int
    exhausted: bool
    strip: tuple
    cutoff: int

    def as_dict(self) -> dict:
        return {
            "hits": [dict(zip(["re_lo", "re_hi", "im_lo", "im_hi", "winding", "residual", "certified"],
                              [t.re_lo, t.re_hi, t.im_lo, t.im_hi, t.winding, t.residual, t.certified]))
                     for t in self.hits],
            "candidates": self.candidates,
            "cells": self.cells,
            "exhausted": self.exhausted,
            "strip": list(self.strip),
            "cutoff": self.cutoff,
        }


def _lattice_values(fn, re_vals: np.ndarray, t_lo: float, dt: float, count: int) -> np.ndarray:
    """``fn`` on vertical lines; zeta-type tails added in closed form."""
    coef = fn.coefficients
    logn = np.log(np.arange(1, coef.size + 1, dtype=np.float64))
    out = np.empty((re_vals.size, count), dtype=np.complex128)
    t = t_lo + dt * np.arange(count)
    for i, sig in enumerate(re_vals):
        line = _kernels.dirichlet_lines(coef, logn, float(sig), float(t_lo), float(dt), count)
        s = sig + 1j * t
        for ak, shift in fn.tails:
            s1 = s + 1j * shift
            line = line + ak * fn.cutoff ** (1 - s1) / (s1 - 1)
        out[i] = line
    return out


def zero_hunt(
    a,
    series: Sequence,
    delta: float = 0.1,
    t_budget: float = 1e4,
    *,
    t_lo: float = 0.0,
    cutoff: int = 1000,
    margin: float | None = None,
    cells_per_tile: int = 4,
) -> ZeroHuntResult:
    """Search ``1 < Re(s) < 1 + delta``, ``t_lo <= Im(s) <= t_budget`` for zeros of ``sum a_k L_k``.

    A lattice with spacing ``delta / (2 cells_per_tile)`` is screened by
    discrete argument change; flagged cells are confirmed with
    :func:`winding_number` on the covering tile (side ``delta/2``, 10%
    overlap).  ``certified`` marks tiles whose minimum modulus beats the
    truncation remainder bound.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    if np.count_nonzero(a) < 2:
        raise ValueError("need at least two nonzero coefficients")
    margin = delta / 20 if margin is None else margin
    fn = dirichlet_function(a, series, cutoff)
    hits, candidates, cells = _hunt(fn, 1.0 + margin, 1.0 + delta, t_lo, float(t_budget),
                                    delta / 2, cells_per_tile)
    return ZeroHuntResult(hits, candidates, cells, not hits,
                          (1.0 + margin, 1.0 + delta, t_lo, float(t_budget)), cutoff)


def _hunt(fn, re_lo: float, re_hi: float, t_lo: float, t_hi: float, side: float,
          cells_per_tile: int = 4) -> tuple:
    """Lattice screen plus tile confirmation over ``[re_lo, re_hi] x [t_lo, t_hi]``."""
    hs = side / cells_per_tile
    n_re = max(1, math.ceil((re_hi - re_lo) / hs - 1e-9))
    re_vals = np.linspace(re_lo, re_hi, n_re + 1)
    n_t = max(1, math.ceil((t_hi - t_lo) / hs - 1e-9))
    dt = (t_hi - t_lo) / n_t
    if hasattr(fn, "coefficients"):
        F = _lattice_values(fn, re_vals, t_lo, dt, n_t + 1)
    else:
        t = t_lo + dt * np.arange(n_t + 1)
        F = _vectorized(fn)(re_vals[:, None] + 1j * t[None, :])
    if not np.any(np.abs(F) > 0):
        raise ContourZeroError(0.0, complex(re_lo, t_lo))
    H = np.angle(F[1:, :] / F[:-1, :])  # along Re
    V = np.angle(F[:, 1:] / F[:, :-1])  # along Im
    wind = (H[:, :-1] + V[1:, :] - H[:, 1:] - V[:-1, :]) / (2 * math.pi)
    flagged = np.argwhere(np.abs(wind) > 0.5)
    stride = 0.9 * side
    n_col = max(1, math.ceil((re_hi - re_lo - side) / stride - 1e-9) + 1)
    cols = [(re_lo + c * stride, min(re_lo + c * stride + side, re_hi)) for c in range(n_col)]
    bound = getattr(fn, "error_bound", None)
    hits: dict = {}
    for i, j in flagged:
        cre = 0.5 * (re_vals[i] + re_vals[i + 1])
        cim = t_lo + (j + 0.5) * dt
        # tiles whose interior holds the cell centre, nearest first
        k0 = max(0, int((cim - t_lo) // stride))
        rows = [(t_lo + k * stride, t_lo + k * stride + side) for k in (k0 - 1, k0, k0 + 1) if k >= 0]
        options = [(r, q) for r in cols for q in rows if r[0] <= cre <= r[1] and q[0] < cim < q[1]]
        options.sort(key=lambda rq: abs(0.5 * sum(rq[0]) - cre) + abs(0.5 * sum(rq[1]) - cim))
        for (r0, r1), (q0, q1) in options:
            key = (r0, r1, q0, q1)
            if key in hits:
                break
            try:
                res = winding_number(fn, key)
            except (ContourZeroError, NonConvergenceError):
                continue
            if res.winding >= 1:
                cert = bound is not None and res.min_modulus > bound(complex(r0, q1))
                hits[key] = Tile(r0, r1, q0, q1, res.winding, res.residual, bool(cert))
            break
    tiles = tuple(sorted(hits.values(), key=lambda tl: (tl.im_lo, tl.re_lo)))
    return tiles, int(flagged.shape[0]), int(wind.size)


def write_tiles_csv(result: ZeroHuntResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["re_lo", "re_hi", "im_lo", "im_hi", "winding", "residual"])
        for tile in result.hits:
            writer.writerow(tile.row())
