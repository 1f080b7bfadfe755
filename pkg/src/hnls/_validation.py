"""Input validation helpers shared by the public API."""

import math
import numbers

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition.

    ``key`` is the dotted path of the offending value when it comes from a
    configuration mapping (e.g. ``"time.dt"``), otherwise ``None``.
    """

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


def check_finite_scalar(value, name, key=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValidationError(f"{name} must be a real number, got {value!r}", key)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}", key)
    return value


def check_positive(value, name, key=None, strict=True):
    value = check_finite_scalar(value, name, key)
    if strict and value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}", key)
    if not strict and value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value!r}", key)
    return value


def check_power_of_two(n, name="n_points", minimum=8, key=None):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {n!r}", key)
    n = int(n)
    if n < minimum or n & (n - 1):
        raise ValidationError(
            f"{name} must be a power of two >= {minimum}, got {n}", key
        )
    return n


def check_samples(values, n_points, name="values"):
    """Coerce ``values`` to a finite complex vector of length ``n_points``."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.shape[0] != n_points:
        raise ValidationError(
            f"{name} must be a vector of length {n_points}, got shape {arr.shape}"
        )
    arr = arr.astype(np.complex128, copy=True)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_state_matrix(X, n_points, name="X"):
    """Validate a batch of fields stacked row-wise, shape (n_samples, n_points)."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != n_points:
        raise ValidationError(
            f"{name} must have shape (n_samples, {n_points}), got {np.shape(X)}"
        )
    arr = arr.astype(np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr
