"""Completely multiplicative unimodular twists ``omega`` on the primes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNIT_TOL = 1e-12

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def seeded_phases(primes, seed: int) -> np.ndarray:
    """Unit complex numbers ``exp(2 pi i u_p)`` with ``u_p`` hashed from ``(seed, p)``.

    Counter-based, so the value at ``p`` does not depend on which other
    primes are queried or in what order.
    """
    p = np.asarray(primes, dtype=np.int64).astype(np.uint64)
    key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        h = _splitmix64(p * _M1 ^ key)
    u = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return np.exp(2j * np.pi * u)


@dataclass(frozen=True, eq=False)
class UnimodularAssignment:
    """``omega(p)`` for every prime: pinned values plus a default rule.

    ``default_rule`` is ``"one"`` or ``"random"`` (seeded hash phases).
    Extension to prime powers is completely multiplicative.
    """

    pinned_primes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    pinned_values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128))
    default_rule: str = "one"
    seed: int | None = None

    def __post_init__(self) -> None:
        primes = np.asarray(self.pinned_primes, dtype=np.int64)
        values = np.asarray(self.pinned_values, dtype=np.complex128)
        if primes.shape != values.shape or primes.ndim != 1:
            raise ValueError("pinned primes and values must be 1-d arrays of equal length")
        if primes.size and np.any(np.diff(primes) <= 0):
            order = np.argsort(primes, kind="stable")
            primes, values = primes[order], values[order]
            if np.any(np.diff(primes) == 0):
                raise ValueError("duplicate pinned prime")
        if values.size and np.max(np.abs(np.abs(values) - 1.0)) > UNIT_TOL:
            bad = int(np.argmax(np.abs(np.abs(values) - 1.0)))
            raise ValueError(f"omega({primes[bad]}) = {values[bad]} is not unimodular")
        if self.default_rule not in ("one", "random"):
            raise ValueError(f"unknown default rule {self.default_rule!r}")
        if self.default_rule == "random" and self.seed is None:
            raise ValueError("the random default rule needs a seed")
        primes.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "pinned_primes", primes)
        object.__setattr__(self, "pinned_values", values)

    @classmethod
    def constant_one(cls) -> "UnimodularAssignment":
        return cls()

    @classmethod
    def random(cls, seed: int) -> "UnimodularAssignment":
        return cls(default_rule="random", seed=int(seed))

    @classmethod
    def from_mapping(cls, pins: dict, default_rule: str = "one", seed: int | None = None):
        primes = np.array(sorted(pins), dtype=np.int64)
        values = np.array([complex(pins[p]) for p in primes], dtype=np.complex128)
        return cls(primes, values, default_rule, seed)

    def default_values(self, primes) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        if self.default_rule == "one":
            return np.ones(primes.shape, dtype=np.complex128)
        return seeded_phases(primes, self.seed)

    def values(self, primes) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        out = self.default_values(primes)
        if self.pinned_primes.size and primes.size:
            pos = np.searchsorted(self.pinned_primes, primes)
            pos = np.minimum(pos, self.pinned_primes.size - 1)
            hit = self.pinned_primes[pos] == primes
            out[hit] = self.pinned_values[pos[hit]]
        return out

    def __call__(self, p: int, k: int = 1) -> complex:
        return complex(self.values(np.array([p]))[0]) ** k

    def is_pinned(self, p: int) -> bool:
        pos = np.searchsorted(self.pinned_primes, p)
        return bool(pos < self.pinned_primes.size and self.pinned_primes[pos] == p)

    @property
    def pins(self) -> dict[int, complex]:
        return {int(p): complex(v) for p, v in zip(self.pinned_primes, self.pinned_values)}

    def with_pins(self, primes, values, *, overwrite: bool = False) -> "UnimodularAssignment":
        """Return a copy with extra pins; existing pins are never changed silently."""
        primes = np.asarray(primes, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.complex128).ravel()
        if primes.size == 0:
            return self
        if self.pinned_primes.size:
            clash = np.isin(primes, self.pinned_primes)
            if clash.any():
                if not overwrite:
                    old = self.values(primes[clash])
                    if np.max(np.abs(old - values[clash])) > 0:
                        raise ValueError(
                            f"prime {int(primes[clash][0])} is already pinned to a different value"
                        )
                keep = ~np.isin(self.pinned_primes, primes[clash])
                base_p, base_v = self.pinned_primes[keep], self.pinned_values[keep]
            else:
                base_p, base_v = self.pinned_primes, self.pinned_values
        else:
            base_p, base_v = self.pinned_primes, self.pinned_values
        allp = np.concatenate([base_p, primes])
        allv = np.concatenate([base_v, values])
        order = np.argsort(allp, kind="stable")
        return UnimodularAssignment(allp[order], allv[order], self.default_rule, self.seed)

    def with_default(self, rule: str, seed: int | None = None) -> "UnimodularAssignment":
        return UnimodularAssignment(self.pinned_primes, self.pinned_values, rule, seed)

    def conjugate(self) -> "UnimodularAssignment":
        if self.default_rule != "one":
            raise ValueError("only assignments with the 'one' default can be conjugated exactly")
        return UnimodularAssignment(self.pinned_primes, np.conj(self.pinned_values), "one", None)

    def max_unit_defect(self) -> float:
        if not self.pinned_values.size:
            return 0.0
        return float(np.max(np.abs(np.abs(self.pinned_values) - 1.0)))

    # text export: header lines, then "p re im" sorted by p; repr() round-trips floats exactly
    def dumps(self) -> str:
        lines = [
            "# unimodular assignment",
            f"# default_rule {self.default_rule}",
            f"# seed {'none' if self.seed is None else int(self.seed)}",
        ]
        for p, v in zip(self.pinned_primes.tolist(), self.pinned_values.tolist()):
            lines.append(f"{p} {float(v.real)!r} {float(v.imag)!r}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "UnimodularAssignment":
        rule, seed = "one", None
        primes, re, im = [], [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "default_rule":
                    rule = parts[1]
                elif len(parts) == 2 and parts[0] == "seed":
                    seed = None if parts[1] == "none" else int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'p re im'")
            primes.append(int(parts[0]))
            re.append(float(parts[1]))
            im.append(float(parts[2]))
        values = np.array(re, dtype=np.float64) + 1j * np.array(im, dtype=np.float64)
        return cls(np.array(primes, dtype=np.int64), values, rule, seed)

    @classmethod
    def load(cls, path) -> "UnimodularAssignment":
        return cls.loads(Path(path).read_text())

    def __len__(self) -> int:
        return int(self.pinned_primes.size)

    def __repr__(self) -> str:
        return (
            f"UnimodularAssignment(pins={len(self)}, default_rule={self.default_rule!r}, "
            f"seed={self.seed})"
        )


def unit(theta: float) -> complex:
    return complex(math.cos(theta), math.sin(theta))
