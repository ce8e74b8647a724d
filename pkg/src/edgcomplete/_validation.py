"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


class DenseLimitError(ValueError):
    """Raised when a dense verification routine is asked to exceed its size cap."""


def check_points(points, *, name: str = "points") -> np.ndarray:
    """Return ``points`` as a finite float array of shape (n, d)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n, d), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have n >= 1 and d >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_square(matrix, *, name: str = "matrix", symmetric: bool = True,
                 atol: float = 1e-10) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if symmetric:
        scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
        if not np.allclose(arr, arr.T, rtol=0.0, atol=atol * scale):
            raise ValueError(f"{name} must be symmetric")
    return arr


def check_distance_matrix(D, *, atol: float = 1e-10) -> np.ndarray:
    """Validate a squared-distance matrix: symmetric, hollow, nonnegative."""
    arr = check_square(D, name="D", atol=atol)
    scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
    if np.any(np.abs(np.diag(arr)) > atol * scale):
        raise ValueError("D must have a zero diagonal")
    if np.any(arr < -atol * scale):
        raise ValueError("D must have nonnegative entries")
    return arr


def check_positive_int(value, name: str, *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_dense_limit(n: int, limit: int | None, what: str) -> None:
    if limit is not None and n > limit:
        raise DenseLimitError(
            f"{what} is dense and limited to n <= {limit} (got n={n}); "
            "pass a larger max_n to override"
        )
