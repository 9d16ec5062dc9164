"""Input validation helpers used at public entry points."""

import math

import numpy as np

from .exceptions import InvalidInputError


def check_finite(**values):
    """Raise if any keyword value is not a finite real number."""
    for name, v in values.items():
        try:
            ok = math.isfinite(v)
        except TypeError:
            raise InvalidInputError(f"{name} must be a real number, got {v!r}") from None
        if not ok:
            raise InvalidInputError(f"{name} must be finite, got {v!r}")


def check_exponent(p):
    check_finite(p=p)
    if not p > 1.0:
        raise InvalidInputError(f"exponent p must satisfy p > 1, got {p!r}")
    return float(p)


def check_boundary_value(l):
    check_finite(l=l)
    if not 0.0 < l <= math.pi / 2:
        raise InvalidInputError(f"boundary value l must lie in (0, pi/2], got {l!r}")
    return float(l)


def check_positive(name, value):
    check_finite(**{name: value})
    if not value > 0:
        raise InvalidInputError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_radii(r):
    """Coerce ``r`` to a 1-D float array of strictly positive finite radii."""
    arr = np.asarray(r, dtype=float)
    if arr.ndim > 1:
        arr = arr.reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("radii must be finite")
    if np.any(arr <= 0):
        raise InvalidInputError("radii must be strictly positive")
    return np.atleast_1d(arr)


def check_vector2(name, v):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be a finite 2-vector, got {v!r}")
    return arr
