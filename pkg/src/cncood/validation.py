"""Input validation helpers shared by the estimator-style API."""

from __future__ import annotations

import numpy as np


def check_points(x, name="X") -> np.ndarray:
    """Finite 2-D float64 array with at least one row."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_labels(y, n_samples: int, name="y") -> np.ndarray:
    """1-based integer class labels 1..K with every class present."""
    arr = np.asarray(y)
    if arr.shape != (n_samples,):
        raise ValueError(f"{name} must have shape ({n_samples},), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.asarray(arr, dtype=np.float64)
        if np.any(rounded != np.floor(rounded)):
            raise ValueError(f"{name} must contain integer class labels")
    arr = arr.astype(np.int64)
    if arr.min() < 1:
        raise ValueError(f"{name} labels are 1-based; got minimum {arr.min()}")
    k = int(arr.max())
    missing = set(range(1, k + 1)) - set(np.unique(arr).tolist())
    if missing:
        raise ValueError(f"{name} is missing classes {sorted(missing)} out of 1..{k}")
    return arr
