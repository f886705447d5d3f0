"""Compiled inner loops.  All reductions run in a fixed index order."""

from __future__ import annotations

import cmath
import math

import numpy as np
from numba import njit

# |z| below which z + log(1 - z) is summed as a power series
_SERIES_CUTOFF = 0.01


@njit(cache=True)
def _neumaier(hi, lo, x):
    s = hi + x
    if abs(hi) >= abs(x):
        lo += (hi - s) + x
    else:
        lo += (x - s) + hi
    return s, lo


@njit(cache=True)
def prime_sums_grid(w, logp, s):
    """``out[i] = sum_j w[j] * exp(-s[i] * logp[j])``."""
    G = s.shape[0]
    out = np.empty(G, dtype=np.complex128)
    for i in range(G):
        sr = s[i].real
        si = s[i].imag
        hr = 0.0
        lr = 0.0
        hi_ = 0.0
        li = 0.0
        for j in range(w.shape[0]):
            mag = math.exp(-sr * logp[j])
            ang = -si * logp[j]
            c = math.cos(ang) * mag
            d = math.sin(ang) * mag
            tr = w[j].real * c - w[j].imag * d
            ti = w[j].real * d + w[j].imag * c
            hr, lr = _neumaier(hr, lr, tr)
            hi_, li = _neumaier(hi_, li, ti)
        out[i] = complex(hr + lr, hi_ + li)
    return out


@njit(cache=True)
def _defect(z):
    """``z + log(1 - z)`` without cancellation for small |z|."""
    az = abs(z)
    if az < _SERIES_CUTOFF:
        total = 0j
        zk = z * z
        k = 2
        while True:
            term = zk / k
            total -= term
            if abs(term) < 1e-18 * (abs(total) + 1e-300) or k > 40:
                break
            zk *= z
            k += 1
        return total
    return z + cmath.log(1.0 - z)


@njit(cache=True)
def log_factor_sums_grid(w, logp, s, defect_only):
    """Sum of ``-log(1 - z)`` (or of ``z + log(1 - z)``) with ``z = w p**-s``.

    Returns ``(sums, max_abs_z, argmax_index)``; ``|z| >= 1`` leaves the
    principal branch and is reported through ``max_abs_z``.
    """
    G = s.shape[0]
    out = np.empty(G, dtype=np.complex128)
    zmax = 0.0
    jmax = -1
    for i in range(G):
        sr = s[i].real
        si = s[i].imag
        hr = 0.0
        lr = 0.0
        hi_ = 0.0
        li = 0.0
        for j in range(w.shape[0]):
            mag = math.exp(-sr * logp[j])
            ang = -si * logp[j]
            z = w[j] * complex(math.cos(ang) * mag, math.sin(ang) * mag)
            az = abs(z)
            if az > zmax:
                zmax = az
                jmax = j
            if az >= 1.0:
                continue
            dz = _defect(z)
            if defect_only:
                t = dz
            else:
                t = z - dz  # -log(1 - z)
            hr, lr = _neumaier(hr, lr, t.real)
            hi_, li = _neumaier(hi_, li, t.imag)
        out[i] = complex(hr + lr, hi_ + li)
    return out, zmax, jmax


@njit(cache=True)
def greedy_round(x, a, order, dev0):
    """Sequential unimodular rounding.

    Visits rows of ``x`` in ``order``; each ``b[j]`` minimizes the running
    deviation ``dev0 + sum (a - b) x`` over the unit circle.
    """
    m, n = x.shape
    b = np.empty(m, dtype=np.complex128)
    dev = dev0.copy()
    u = np.empty(n, dtype=np.complex128)
    for idx in range(order.shape[0]):
        j = order[idx]
        z = 0j
        for i in range(n):
            u[i] = dev[i] + a[j] * x[j, i]
            z += u[i] * x[j, i].conjugate()
        az = abs(z)
        if az > 1e-300:
            bj = z / az
        elif abs(a[j]) > 0.0:
            bj = a[j] / abs(a[j])
        else:
            bj = 1.0 + 0j
        b[j] = bj
        for i in range(n):
            dev[i] = u[i] - bj * x[j, i]
    return b, dev


@njit(cache=True)
def grid_round_sweep(H, target, k, sweeps):
    """Coordinate rounding over a tabulated phase grid.

    ``H[g, j, q]`` is the contribution of item ``j`` at grid point ``g`` with
    phase index ``q``.  Each visit re-rounds one item to the phase that
    minimizes the squared residual.  Returns the number of sweeps used.
    """
    G, P, Q = H.shape
    total = np.zeros(G, dtype=np.complex128)
    for j in range(P):
        for g in range(G):
            total[g] += H[g, j, k[j]]
    used = 0
    for sweep in range(sweeps):
        used = sweep + 1
        changed = False
        for j in range(P):
            best = -1
            best_cost = 0.0
            for q in range(Q):
                cost = 0.0
                for g in range(G):
                    r = target[g] - (total[g] - H[g, j, k[j]]) - H[g, j, q]
                    cost += r.real * r.real + r.imag * r.imag
                if best < 0 or cost < best_cost - 1e-18:
                    best = q
                    best_cost = cost
            if best != k[j]:
                for g in range(G):
                    total[g] += H[g, j, best] - H[g, j, k[j]]
                k[j] = best
                changed = True
        if not changed:
            break
    return total, used


@njit(cache=True)
def dirichlet_lines(coef, logn, sigma, t0, dt, count):
    """``out[j] = sum_n coef[n] n**-(sigma + i(t0 + j dt))`` along a vertical line."""
    out = np.zeros(count, dtype=np.complex128)
    for n in range(coef.shape[0]):
        c = coef[n]
        if c == 0:
            continue
        ln = logn[n]
        mag = math.exp(-sigma * ln)
        z = c * mag * cmath.exp(complex(0.0, -t0 * ln))
        step = cmath.exp(complex(0.0, -dt * ln))
        for j in range(count):
            out[j] += z
            z *= step
            if (j & 255) == 255:  # renormalize drift of the recurrence
                z = c * mag * cmath.exp(complex(0.0, -(t0 + (j + 1) * dt) * ln))
    return out


@njit(cache=True)
def lucy_prime_sums(x, r, is_prime, lo, hi, s):
    """Prime-sum table for ``f(n) = n^{-s}`` by the Lucy recursion.

    On entry ``lo[v]`` and ``hi[k]`` hold ``sum_{2 <= n <= v} n^{-s}`` for
    ``v <= r`` and ``v = x // k``; on exit they hold the same sums over
    primes only.  ``r = isqrt(x)``.  Updated in place.
    """
    for p in range(2, r + 1):
        if not is_prime[p]:
            continue
        fp = np.exp(-s * np.log(float(p)))
        sp = lo[p - 1]
        p2 = p * p
        kmax = min(r, x // p2)
        for k in range(1, kmax + 1):
            kp = k * p
            if kp <= r:
                sub = hi[kp]
            else:
                sub = lo[x // kp]
            hi[k] -= fp * (sub - sp)
        v = r
        while v >= p2:
            lo[v] -= fp * (lo[v // p] - sp)
            v -= 1


def as_complex(values) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(values, dtype=np.complex128))


def as_float(values) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64))
