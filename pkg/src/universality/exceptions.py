"""Exception types raised across the package."""

from __future__ import annotations

from .primes import InvalidRangeError, PrimeRangeError, RangeTooLargeError


class UniversalityError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


class MissingCoefficientError(UniversalityError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class CoefficientFileError(UniversalityError, ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class DivergenceError(UniversalityError, ValueError):
    """Requested evaluation at Re(s) <= 1 (no continuation is implemented)."""


class VanishingLocalFactorError(UniversalityError, ArithmeticError):
    def __init__(self, p: int, s: complex, detail: str = ""):
        self.p = int(p)
        self.s = complex(s)
        msg = f"local factor at p={self.p}, s={self.s} is not on the principal-log branch"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class AdmissibilityError(UniversalityError, ValueError):
    pass


class ContractionError(UniversalityError, RuntimeError):
    def __init__(self, ratio: float, required: float, N: int):
        self.ratio = float(ratio)
        self.required = float(required)
        self.N = int(N)
        super().__init__(
            f"contraction ratio {ratio:.4f} exceeds {required:.4f} at N={N}; "
            "N is too small for the asymptotic error terms"
        )


class BlockBudgetError(UniversalityError, RuntimeError):
    def __init__(self, P: int, upper: int, required_exponent: float):
        self.P = int(P)
        self.upper = int(upper)
        self.required_exponent = float(required_exponent)
        super().__init__(
            f"correction steps left the block [{P}, {upper}); "
            f"required exponent 1+xi >= {required_exponent:.4f}"
        )


class RoundingError(UniversalityError, AssertionError):
    """The unimodular rounding bound failed; indicates an implementation bug."""


class BasePhaseDivergenceError(UniversalityError, RuntimeError):
    pass


class ScheduleOverflowError(UniversalityError, ValueError):
    pass


class SteeringError(UniversalityError, RuntimeError):
    pass


class IllConditionedError(UniversalityError, ArithmeticError):
    pass


class InsufficientResolutionError(UniversalityError, ValueError):
    pass


class DegenerateMultiplierError(UniversalityError, RuntimeError):
    pass


class ContourZeroError(UniversalityError, ArithmeticError):
    def __init__(self, min_modulus: float, where: complex):
        self.min_modulus = float(min_modulus)
        self.where = complex(where)
        super().__init__(f"function nearly vanishes on the contour: |f({where})| = {min_modulus:.3e}")


class NonConvergenceError(UniversalityError, RuntimeError):
    pass


class ConfigError(UniversalityError, ValueError):
    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.message = message
        self.line = line
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"config {where}field '{field}': {message}")


__all__ = [
    "UniversalityError",
    "PrimeRangeError",
    "RangeTooLargeError",
    "InvalidRangeError",
    "MissingCoefficientError",
    "CoefficientFileError",
    "DivergenceError",
    "VanishingLocalFactorError",
    "AdmissibilityError",
    "ContractionError",
    "BlockBudgetError",
    "RoundingError",
    "BasePhaseDivergenceError",
    "ScheduleOverflowError",
    "SteeringError",
    "IllConditionedError",
    "InsufficientResolutionError",
    "DegenerateMultiplierError",
    "ContourZeroError",
    "NonConvergenceError",
    "ConfigError",
]
