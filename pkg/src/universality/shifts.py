"""Real shifts ``t`` with ``p^{it}`` close to prescribed unit targets, and hit densities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "ShiftWindow",
    "DensityEstimate",
    "max_deviation",
    "shift_predicate",
    "find_shift",
    "density_estimate",
    "write_hits_csv",
]

CHUNK = 1 << 16


def _targets(targets: Mapping[int, complex]) -> tuple[np.ndarray, np.ndarray]:
    if not targets:
        raise ValueError("need at least one target prime")
    primes = np.array(sorted(int(p) for p in targets), dtype=np.int64)
    if primes[0] < 2:
        raise ValueError("target keys must be primes >= 2")
    values = np.array([complex(targets[int(p)]) for p in primes])
    if np.max(np.abs(np.abs(values) - 1.0)) > 1e-12:
        raise ValueError("targets must be unimodular")
    return primes, values


def max_deviation(t, targets: Mapping[int, complex]) -> np.ndarray:
    """``max_p |p^{it} - a_p|`` for scalar or array ``t``."""
    primes, values = _targets(targets)
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    logp = np.log(primes.astype(np.float64))
    dev = np.abs(np.exp(1j * np.multiply.outer(t_arr, logp)) - values).max(axis=1)
    return float(dev[0]) if np.ndim(t) == 0 else dev


def shift_predicate(targets: Mapping[int, complex], eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``t -> max_p |p^{it} - a_p| < eps``."""
    _targets(targets)

    def predicate(t):
        return np.asarray(max_deviation(np.atleast_1d(t), targets)) < eps

    return predicate


@dataclass(frozen=True, eq=False)
class ShiftWindow:
    """Search window with the verified hits found in it."""

    T_lo: float
    T_hi: float
    step: float
    eps: float
    targets: dict = field(repr=False)
    hits: tuple = ()
    deviations: tuple = ()
    evaluated: int = 0
    exhausted: bool = False

    def __post_init__(self) -> None:
        hits = np.asarray(self.hits, dtype=np.float64)
        if hits.size > 1 and np.any(np.diff(hits) < 0):
            raise ValueError("hits must be sorted")
        if hits.size and (hits[0] < self.T_lo or hits[-1] > self.T_hi):
            raise ValueError("hits must lie in the window")
        if hits.size:
            dev = np.atleast_1d(max_deviation(hits, self.targets))
            if np.any(dev >= self.eps):
                raise ValueError("a hit fails its predicate on re-verification")
            object.__setattr__(self, "deviations", tuple(float(d) for d in dev))

    @property
    def found(self) -> bool:
        return len(self.hits) > 0

    def as_dict(self) -> dict:
        return {
            "T_lo": self.T_lo, "T_hi": self.T_hi, "step": self.step, "eps": self.eps,
            "hits": list(self.hits), "deviations": list(self.deviations),
            "evaluated": self.evaluated, "exhausted": self.exhausted,
        }


def find_shift(
    targets: Mapping[int, complex],
    eps: float,
    T_lo: float = 0.0,
    T_hi: float = 1e5,
    *,
    step: float | None = None,
    max_hits: int = 16,
    refine: bool = True,
) -> ShiftWindow:
    """Scan ``[T_lo, T_hi]`` for ``t`` with ``max_p |p^{it} - a_p| < eps``.

    The objective is Lipschitz with constant ``log N`` (``N`` the largest
    target prime), so the default step ``eps / (2 log N)`` cannot miss a
    solution that has margin ``eps / 2``.  Sub-threshold local minima are
    polished by a bounded golden-section search.  An empty result is a
    valid, flagged outcome.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if T_hi < T_lo:
        raise ValueError("need T_lo <= T_hi")
    primes, _ = _targets(targets)
    lipschitz = math.log(max(int(primes[-1]), 2))
    step = eps / (2 * lipschitz) if step is None else float(step)
    count = int(math.floor((T_hi - T_lo) / step)) + 1
    hits: list[tuple[float, float]] = []
    evaluated = 0
    prev_tail = None
    for start in range(0, count, CHUNK):
        # one extra point on each side so local minima at chunk edges are seen
        idx = np.arange(max(start - 1, 0), min(start + CHUNK + 1, count))
        t = T_lo + idx * step
        dev = np.asarray(max_deviation(t, targets))
        evaluated += min(CHUNK, count - start)
        left = np.r_[np.inf, dev[:-1]]
        right = np.r_[dev[1:], np.inf]
        cand = np.flatnonzero((dev <= left) & (dev < right) & (dev < eps + lipschitz * step))
        for i in cand:
            gi = int(idx[i])
            if gi < start or gi >= start + CHUNK:
                continue
            t0, d0 = float(t[i]), float(dev[i])
            if refine:
                lo, hi = max(T_lo, t0 - step), min(T_hi, t0 + step)
                if hi > lo:
                    res = minimize_scalar(lambda x: max_deviation(x, targets), bounds=(lo, hi),
                                          method="bounded", options={"xatol": step * 1e-6})
                    if res.fun < d0:
                        t0, d0 = float(res.x), float(res.fun)
            if d0 < eps and (not hits or t0 - hits[-1][0] > step):
                hits.append((t0, d0))
        if len(hits) >= max_hits:
            break
    hits = hits[:max_hits]
    return ShiftWindow(
        float(T_lo), float(T_hi), step, float(eps), dict(targets),
        tuple(h[0] for h in hits), evaluated=evaluated, exhausted=not hits,
    )


@dataclass(frozen=True)
class DensityEstimate:
    fraction: float
    radius: float
    samples: int
    hits: int
    T: float
    seed: int

    @property
    def excludes_zero(self) -> bool:
        return self.fraction - self.radius > 0

    def as_dict(self) -> dict:
        return {"fraction": self.fraction, "radius": self.radius, "samples": self.samples,
                "hits": self.hits, "T": self.T, "seed": self.seed,
                "excludes_zero": self.excludes_zero}


def density_estimate(predicate: Callable, T: float, samples: int, seed: int,
                     chunk: int = 1 << 18) -> DensityEstimate:
    """Fraction of uniform ``t`` in ``[0, T]`` satisfying ``predicate`` (95% radius)."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining:
        m = min(chunk, remaining)
        t = rng.uniform(0.0, T, m)
        hits += int(np.count_nonzero(predicate(t)))
        remaining -= m
    frac = hits / samples
    radius = 1.96 * math.sqrt(frac * (1 - frac) / samples)
    return DensityEstimate(frac, radius, samples, hits, float(T), int(seed))


def write_hits_csv(window: ShiftWindow, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "max_deviation"])
        for t, d in zip(window.hits, window.deviations):
            writer.writerow([repr(t), repr(d)])
