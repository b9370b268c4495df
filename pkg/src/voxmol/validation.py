"""Input validation helpers used across the public API surface."""

from __future__ import annotations

import numpy as np


def check_coords(coords, name: str = "coords") -> np.ndarray:
    """Coerce to a contiguous (N, 3) float32 array with finite entries."""
    arr = np.ascontiguousarray(coords, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vector3(value, name: str = "vector") -> np.ndarray:
    """Coerce to a length-3 float64 vector with finite entries."""
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(value)}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_non_negative(value, name: str) -> float:
    value = float(value)
    if value < 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def check_rng(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None (fresh entropy)."""
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
