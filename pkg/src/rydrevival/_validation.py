"""Input validation helpers shared by the library and the estimator wrappers."""
from fractions import Fraction
import numbers

import numpy as np

from .exceptions import ConfigError


def check_time_grid(t, name="t"):
    """Return ``t`` as a 1-D strictly increasing float array."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ConfigError(f"{name} must be strictly increasing")
    return arr


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(float(value)):
        raise ConfigError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value!r}")
    return value


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def as_fraction(value, name="ratio"):
    """Parse ``value`` (Fraction, int, 'r/s' string or (r, s) pair) into a Fraction."""
    try:
        if isinstance(value, Fraction):
            frac = value
        elif isinstance(value, tuple):
            frac = Fraction(int(value[0]), int(value[1]))
        elif isinstance(value, numbers.Integral):
            frac = Fraction(int(value))
        elif isinstance(value, str):
            frac = Fraction(value.strip())
        elif isinstance(value, float):
            frac = Fraction(value)
        else:
            raise TypeError(type(value).__name__)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"{name} is not an exact rational: {value!r}") from exc
    return frac


def exact_real(value):
    """Exact rational image of an int / Fraction / float (floats are taken at their binary value)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    return Fraction(float(value))
