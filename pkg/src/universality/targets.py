"""Compact domains, Laplace-transform targets and their Riemann-sum discretization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import IllConditionedError, InsufficientResolutionError

__all__ = [
    "CompactDomain",
    "LaplaceTarget",
    "RiemannPlan",
    "Admissibility",
    "FitResult",
    "laplace_eval",
    "admissibility_bound",
    "admissibility_check",
    "discretize",
    "fit_target",
    "LaplaceTargetRegressor",
]

DEFAULT_SAMPLES = 1025  # odd, so the halved grid exists for Richardson
RIDGE = 1e-10
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class CompactDomain:
    """Grid model of a compact set ``K`` in ``Re(s) > 0`` (rectangle or disk)."""

    shape: str
    params: tuple
    h: float
    points: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    @classmethod
    def rectangle(cls, sigma_lo, sigma_hi, tau_lo, tau_hi, h=0.05) -> "CompactDomain":
        if not (sigma_lo <= sigma_hi and tau_lo <= tau_hi):
            raise ValueError("rectangle bounds must be ordered")
        if h <= 0:
            raise ValueError("grid spacing h must be positive")
        ns = max(1, math.ceil((sigma_hi - sigma_lo) / h - 1e-9)) + 1
        nt = max(1, math.ceil((tau_hi - tau_lo) / h - 1e-9)) + 1
        sig = np.linspace(sigma_lo, sigma_hi, ns)
        tau = np.linspace(tau_lo, tau_hi, nt)
        pts = (sig[:, None] + 1j * tau[None, :]).ravel()
        on_edge = (
            np.isclose(pts.real, sigma_lo) | np.isclose(pts.real, sigma_hi)
            | np.isclose(pts.imag, tau_lo) | np.isclose(pts.imag, tau_hi)
        )
        dom = cls("rectangle", (float(sigma_lo), float(sigma_hi), float(tau_lo), float(tau_hi)),
                  float(h), pts, pts[on_edge])
        dom._validate()
        return dom

    @classmethod
    def disk(cls, center, radius, h=0.05) -> "CompactDomain":
        center = complex(center)
        if radius <= 0 or h <= 0:
            raise ValueError("radius and h must be positive")
        k = math.ceil(radius / h)
        offs = np.arange(-k, k + 1) * h
        lattice = (offs[:, None] + 1j * offs[None, :]).ravel()
        inner = center + lattice[np.abs(lattice) < radius]
        nb = max(8, math.ceil(2 * math.pi * radius / h))
        ring = center + radius * np.exp(2j * np.pi * np.arange(nb) / nb)
        dom = cls("disk", (center.real, center.imag, float(radius)), float(h),
                  np.concatenate([inner, ring]), ring)
        dom._validate()
        return dom

    def _validate(self) -> None:
        if self.xi_min <= 0:
            raise ValueError(f"domain must lie in Re(s) > 0 (min Re = {self.xi_min})")
        self.points.flags.writeable = False
        self.boundary.flags.writeable = False

    @property
    def xi_min(self) -> float:
        if self.shape == "rectangle":
            return self.params[0]
        return self.params[0] - self.params[2]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.points)))

    @property
    def covering_radius(self) -> float:
        """Largest distance from a point of ``K`` to the grid (upper bound)."""
        if self.shape == "rectangle":
            s0, s1, t0, t1 = self.params
            ns = len(np.unique(self.points.real))
            nt = len(np.unique(self.points.imag))
            ds = (s1 - s0) / max(ns - 1, 1)
            dt = (t1 - t0) / max(nt - 1, 1)
            return 0.5 * math.hypot(ds, dt)
        return self.h / math.sqrt(2)

    def describe(self) -> dict:
        if self.shape == "rectangle":
            s0, s1, t0, t1 = self.params
            return {"shape": "rectangle", "sigma": [s0, s1], "tau": [t0, t1], "h": self.h}
        cr, ci, r = self.params
        return {"shape": "disk", "center": [cr, ci], "radius": r, "h": self.h}

    def __len__(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True, eq=False)
class LaplaceTarget:
    """``f(s) = C + int_A^B g(x) exp(-s x) dx`` with ``g`` sampled uniformly."""

    C: complex
    A: float
    B: float
    samples: np.ndarray = field(repr=False)
    sup_xg: float = field(init=False)

    def __post_init__(self) -> None:
        g = np.asarray(self.samples, dtype=np.complex128).ravel().copy()
        if not 0 <= self.A < self.B:
            raise ValueError("need 0 <= A < B")
        if g.size < 2:
            raise ValueError("need at least two samples of g")
        if not np.all(np.isfinite(g)):
            raise ValueError("g samples must be finite")
        g.flags.writeable = False
        object.__setattr__(self, "C", complex(self.C))
        object.__setattr__(self, "samples", g)
        # |x g(x)| is quadratic on each segment; refine to catch interior maxima
        xf = np.linspace(self.A, self.B, 8 * (g.size - 1) + 1)
        object.__setattr__(self, "sup_xg", float(np.max(np.abs(xf * self.g(xf)))))

    @classmethod
    def from_function(cls, fn: Callable, A: float, B: float, C: complex = 0.0,
                      samples: int = DEFAULT_SAMPLES) -> "LaplaceTarget":
        x = np.linspace(A, B, samples)
        return cls(C, A, B, np.asarray(fn(x), dtype=np.complex128) * np.ones_like(x))

    @classmethod
    def constant(cls, C: complex) -> "LaplaceTarget":
        return cls(C, 0.0, 1.0, np.zeros(2))

    @classmethod
    def flat(cls, value: complex, A: float, B: float, C: complex = 0.0) -> "LaplaceTarget":
        return cls(C, A, B, np.full(DEFAULT_SAMPLES, complex(value)))

    @classmethod
    def exp_decay(cls, rate: float, A: float, B: float, C: complex = 0.0,
                  samples: int = DEFAULT_SAMPLES) -> "LaplaceTarget":
        return cls.from_function(lambda x: np.exp(-rate * x), A, B, C, samples)

    @classmethod
    def from_table(cls, path, C: complex = 0.0) -> "LaplaceTarget":
        """Two or three columns ``x re [im]`` on a uniform grid."""
        data = np.loadtxt(Path(path), ndmin=2)
        x = data[:, 0]
        if x.size < 2 or not np.allclose(np.diff(x), x[1] - x[0], rtol=1e-9, atol=1e-12):
            raise ValueError(f"{path}: x column must be a uniform grid")
        g = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0)
        return cls(C, float(x[0]), float(x[-1]), g)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.A, self.B, self.samples.size)

    def g(self, x) -> np.ndarray:
        """Linear interpolation of the samples; zero outside ``[A, B]``."""
        x = np.asarray(x, dtype=np.float64)
        grid = self.x
        re = np.interp(x, grid, self.samples.real, left=0.0, right=0.0)
        im = np.interp(x, grid, self.samples.imag, left=0.0, right=0.0)
        return re + 1j * im

    def scaled(self, factor: complex, C: complex | None = None) -> "LaplaceTarget":
        return LaplaceTarget(self.C if C is None else C, self.A, self.B, self.samples * factor)

    def __add__(self, other: "LaplaceTarget") -> "LaplaceTarget":
        if (self.A, self.B, self.samples.size) != (other.A, other.B, other.samples.size):
            raise ValueError("targets must share the sample grid")
        return LaplaceTarget(self.C + other.C, self.A, self.B, self.samples + other.samples)

    def describe(self) -> dict:
        return {
            "C": [self.C.real, self.C.imag],
            "A": self.A,
            "B": self.B,
            "samples": int(self.samples.size),
            "sup_xg": self.sup_xg,
        }


def _trapezoid(target: LaplaceTarget, s: np.ndarray, stride: int = 1) -> np.ndarray:
    x = target.x[::stride]
    g = target.samples[::stride]
    w = np.full(x.size, x[1] - x[0]) if x.size > 1 else np.zeros(1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return np.exp(-np.multiply.outer(s, x)) @ (w * g)


def laplace_eval(target: LaplaceTarget, s, with_error: bool = False):
    """``C`` plus composite-trapezoid quadrature of the Laplace integral.

    ``with_error`` also returns a Richardson estimate ``|T_h - T_2h| / 3``.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    full = _trapezoid(target, s_arr)
    value = target.C + full
    if with_error:
        n = target.samples.size
        if (n - 1) % 2 == 0 and n >= 5:
            err = np.abs(full - _trapezoid(target, s_arr, 2)) / 3.0
        else:
            err = np.full(s_arr.shape, np.inf)
        if np.ndim(s) == 0:
            return complex(value[0]), float(err[0])
        return value, err
    return complex(value[0]) if np.ndim(s) == 0 else value


@dataclass(frozen=True)
class Admissibility:
    passed: bool
    bound: float
    sup_xg: float
    margin: float

    def as_dict(self) -> dict:
        return {"passed": self.passed, "bound": self.bound, "sup_xg": self.sup_xg,
                "margin": self.margin}


def admissibility_bound(n: int, lam: float, Lam: float) -> float:
    """``(1/8) sqrt(lam^3 / (n^3 Lam))``, the largest admissible ``sup |x g(x)|``."""
    if n < 1 or lam <= 0 or Lam <= 0:
        raise ValueError("need n >= 1, lambda > 0, Lambda > 0")
    return 0.125 * math.sqrt(lam**3 / (n**3 * Lam))


def admissibility_check(target, n: int, lam: float, Lam: float) -> Admissibility:
    """Pass iff ``sup |x g(x)|`` is within the admissible bound.

    ``target`` may be a :class:`LaplaceTarget` or a bare ``sup |x g|`` value.
    """
    bound = admissibility_bound(n, lam, Lam)
    sup = float(target.sup_xg if isinstance(target, LaplaceTarget) else target)
    return Admissibility(sup <= bound, bound, sup, bound - sup)


@dataclass(frozen=True, eq=False)
class RiemannPlan:
    M: int
    B: float
    nodes: np.ndarray
    weights: np.ndarray
    certified_error: float
    measured_error: float

    def __post_init__(self) -> None:
        if self.nodes.size != self.M or self.weights.size != self.M:
            raise ValueError("plan needs exactly M nodes and weights")
        if self.M > 1 and np.any(np.diff(self.nodes) <= 0):
            raise ValueError("plan nodes must increase")

    def evaluate(self, s) -> np.ndarray:
        s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
        out = np.exp(-np.multiply.outer(s_arr, self.nodes)) @ self.weights
        return complex(out[0]) if np.ndim(s) == 0 else out


def _riemann_defect(hfun, B: float, M: int, s: np.ndarray, per_cell: int) -> np.ndarray:
    """Per grid point ``sum_m (B/M) max_{x in cell m} |h_s(x) - h_s(mB/M)|``."""
    out = np.zeros(s.shape, dtype=np.float64)
    width = B / M
    for m in range(1, M + 1):
        x = np.linspace((m - 1) * width, m * width, per_cell + 1)
        vals = hfun(np.multiply.outer(s, x), x)
        out += width * np.max(np.abs(vals - vals[:, -1:]), axis=1)
    return out


def discretize(target: LaplaceTarget, M: int, K: CompactDomain, tol: float | None = None) -> RiemannPlan:
    """Riemann sum with nodes ``mB/M`` and a modulus-of-continuity certificate over ``K``.

    The certificate bounds ``sum (B/M) max |h_s(x) - h_s(mB/M)|`` with
    ``h_s(x) = g(x) e^{-sx}`` on the grid, plus the covering radius times
    the same bound for ``x h_s(x)`` (first-order slack for off-grid ``s``).
    """
    if M < 1:
        raise ValueError("M must be positive")
    B = target.B
    nodes = np.arange(1, M + 1) * B / M
    weights = target.g(nodes) * (B / M)
    s = np.asarray(K.points, dtype=np.complex128)
    per_cell = max(8, math.ceil(target.samples.size / M))
    if not np.any(target.samples):
        cert = 0.0
        measured = 0.0
    else:
        g = target.g
        d0 = _riemann_defect(lambda sx, x: g(x) * np.exp(-sx), B, M, s, per_cell)
        d1 = _riemann_defect(lambda sx, x: x * g(x) * np.exp(-sx), B, M, s, per_cell)
        cert = float(np.max(d0) + K.covering_radius * np.max(d1))
        approx = np.exp(-np.multiply.outer(s, nodes)) @ weights
        exact = laplace_eval(target, s) - target.C
        measured = float(np.max(np.abs(approx - exact)))
        quad = float(np.max(laplace_eval(target, s, with_error=True)[1]))
        cert = max(cert, measured + quad)
    plan = RiemannPlan(M, B, nodes, weights, cert, measured)
    if tol is not None and cert > tol:
        raise InsufficientResolutionError(
            f"Riemann certificate {cert:.3e} exceeds tolerance {tol:.3e} at M={M}"
        )
    return plan


@dataclass(frozen=True, eq=False)
class FitResult:
    target: LaplaceTarget
    residual: float
    rms: float
    condition: float


def fit_target(f_samples, points, A: float, B: float, M: int, ridge: float = RIDGE,
               with_constant: bool = True) -> FitResult:
    """Least-squares surrogate: ``f(s) ~ C + sum_m w_m g_m e^{-s x_m}`` over grid points.

    ``x_m`` are ``M`` uniform nodes on ``[A, B]`` with trapezoid weights
    ``w_m``, so the fitted target evaluates exactly like the model.
    Columns are normalized before the ridge term is added.
    """
    f = np.asarray(f_samples, dtype=np.complex128).ravel()
    s = np.asarray(points, dtype=np.complex128).ravel()
    if f.size != s.size:
        raise ValueError("need one sample per grid point")
    if M < 2 or s.size < M:
        raise ValueError("need M >= 2 and at least M grid samples")
    if with_constant and np.max(np.abs(f - f.mean())) <= 1e-12 * max(1.0, float(np.max(np.abs(f)))):
        # constant data: the exponential columns are nearly collinear with 1
        target = LaplaceTarget(complex(f.mean()), A, B, np.zeros(M))
        resid = float(np.max(np.abs(f - f.mean())))
        return FitResult(target, resid, resid, 1.0)
    x = np.linspace(A, B, M)
    w = np.full(M, (B - A) / (M - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    design = np.exp(-np.multiply.outer(s, x)) * w
    if with_constant:
        design = np.hstack([np.ones((s.size, 1)), design])
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    An = design / scale
    gram = An.conj().T @ An
    gram += ridge * np.eye(gram.shape[0])
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(f"normal system condition estimate {cond:.3e} exceeds 1e12")
    coef = np.linalg.solve(gram, An.conj().T @ f) / scale
    C = complex(coef[0]) if with_constant else 0j
    g = coef[1:] if with_constant else coef
    resid = design @ coef - f
    target = LaplaceTarget(C, A, B, g)
    return FitResult(target, float(np.max(np.abs(resid))), float(np.sqrt(np.mean(np.abs(resid) ** 2))), cond)


class LaplaceTargetRegressor(RegressorMixin, BaseEstimator):
    """Fit a Laplace-transform target to samples of ``f`` on grid points ``X``.

    ``X`` holds complex points ``s`` (any shape that ravels to one axis).
    """

    def __init__(self, A=0.0, B=10.0, M=64, ridge=RIDGE):
        self.A = A
        self.B = B
        self.M = M
        self.ridge = ridge

    def fit(self, X, y):
        res = fit_target(y, X, self.A, self.B, self.M, self.ridge)
        self.target_ = res.target
        self.residual_ = res.residual
        self.condition_ = res.condition
        return self

    def predict(self, X):
        return laplace_eval(self.target_, np.asarray(X, dtype=np.complex128).ravel())

    def score(self, X, y, sample_weight=None):
        # R^2 is undefined for complex targets; report minus the sup residual
        return -float(np.max(np.abs(self.predict(X) - np.asarray(y).ravel())))
