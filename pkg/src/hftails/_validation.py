"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = ["DataWarning", "check_sample", "check_positive", "freeze"]


class DataWarning(UserWarning):
    """Soft data-quality warning (small samples, skipped rows, omitted scales)."""


def check_sample(x, name="x", min_len=1, allow_empty=False):
    """Coerce ``x`` to a 1-D float64 array and reject NaN/inf entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise ValueError(f"{name} is empty")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.size < min_len:
        raise ValueError(f"{name} needs at least {min_len} values, got {arr.size}")
    return arr


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def freeze(arr):
    """Return ``arr`` as a read-only ndarray (containers are immutable by contract)."""
    out = np.asarray(arr)
    out.setflags(write=False)
    return out
