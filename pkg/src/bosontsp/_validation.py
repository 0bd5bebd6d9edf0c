"""Input validation helpers shared by the estimators and the functional API."""

from numbers import Integral

import numpy as np


def check_distance_array(X, name="X"):
    """Validate a square, finite, nonnegative distance matrix.

    Returns a read-only float64 copy with the diagonal checked to be zero.
    """
    arr = np.array(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError(f"{name} needs at least 2 locations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative distances")
    if np.any(np.diag(arr) != 0):
        raise ValueError(f"{name} must have a zero diagonal")
    arr.setflags(write=False)
    return arr


def check_n_locations(n):
    if not isinstance(n, Integral) or isinstance(n, bool):
        raise TypeError(f"n_locations must be an integer, got {type(n).__name__}")
    if n < 2:
        raise ValueError(f"n_locations must be >= 2, got {n}")
    return int(n)


def check_bits(bits, length=None):
    """Coerce a single bit string (sequence, array or '0101' string) to uint8."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"bit string may only contain '0' and '1', got {bits!r}")
        arr = np.fromiter((c == "1" for c in bits), dtype=np.uint8, count=len(bits))
    else:
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise ValueError(f"bit string must be 1-D, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("bit string entries must be 0 or 1")
        arr = arr.astype(np.uint8)
    if length is not None and arr.size != length:
        raise ValueError(f"expected a bit string of length {length}, got {arr.size}")
    return arr


def check_bit_batch(bits, length):
    """Coerce a batch of bit strings to a (n_samples, length) uint8 array."""
    arr = np.asarray(bits)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != length:
        raise ValueError(f"expected bit strings of length {length}, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit string entries must be 0 or 1")
    return arr.astype(np.uint8)


def check_positive(value, name, strict=True):
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        kind = "positive" if strict else "nonnegative"
        raise ValueError(f"{name} must be {kind}, got {value}")
    return float(value)


def check_random_state_seed(seed):
    if not isinstance(seed, Integral) or isinstance(seed, bool) or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)
