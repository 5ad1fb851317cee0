# utils/errors.py: error roots shared by every module
from __future__ import annotations
from typing import Optional


class RydexError(RuntimeError):
    """Root of everything rydex raises on purpose."""
    exit_code = 1


class ConfigError(RydexError, ValueError):
    """Bad input: parameters, grids, config files. CLI exit code 2."""
    exit_code = 2


class NumericalError(RydexError):
    """A solver could not produce a trustworthy number. CLI exit code 3."""
    exit_code = 3


class ParameterDomainError(ConfigError):
    def __init__(self, field: str, message: str, value: Optional[float] = None):
        self.field = field
        self.value = value
        detail = f"{field}: {message}"
        if value is not None:
            detail += f" (got {value!r})"
        super().__init__(detail)


def require_positive(field: str, value: float) -> float:
    if not value > 0:
        raise ParameterDomainError(field, "must be strictly positive", value)
    return float(value)


def require_non_negative(field: str, value: float) -> float:
    if value < 0:
        raise ParameterDomainError(field, "must be non-negative", value)
    return float(value)
