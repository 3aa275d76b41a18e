"""Input validation helpers shared by every module."""

import math
import numbers

import numpy as np

UINT64_MAX = (1 << 64) - 1


class DomainError(ValueError):
    """A parameter lies outside the region where a formula or estimator is defined."""


def check_alpha(alpha, *, upper=2.0, include_upper=True, name="alpha"):
    alpha = float(alpha)
    ok_upper = alpha <= upper if include_upper else alpha < upper
    if not (alpha > 0.0 and ok_upper) or math.isnan(alpha):
        bracket = "]" if include_upper else ")"
        raise DomainError(f"{name} must lie in (0, {upper:g}{bracket}, got {alpha!r}")
    return alpha


def check_positive(value, name):
    value = float(value)
    if not value > 0.0 or math.isinf(value):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")
    return value


def check_probability(value, name, *, allow_one=True):
    value = float(value)
    ok = 0.0 < value <= 1.0 if allow_one else 0.0 < value < 1.0
    if not ok:
        raise DomainError(f"{name} must lie in (0, 1{']' if allow_one else ')'}, got {value!r}")
    return value


def check_int(value, name, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_uint64(value, name):
    value = check_int(value, name, minimum=0)
    if value > UINT64_MAX:
        raise DomainError(f"{name} must fit in 64 unsigned bits, got {value}")
    return value


def as_float_vector(x, name="x"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DomainError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr
