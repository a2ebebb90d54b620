from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

PIPELINES = ("raw", "kalman", "kdh")


def check_depths(X) -> np.ndarray:
    """Boundary depths as float64 ``(n_columns, n_layers)``; NaN marks dropout."""
    X = check_array(
        X, dtype=np.float64, ensure_2d=False, ensure_all_finite="allow-nan", copy=False
    )
    if X.ndim == 1:
        X = X[:, None]
    if np.isinf(X).any():
        raise ValueError("depths must be finite or NaN (dropout)")
    return X


def check_pipeline(name: str) -> str:
    name = str(name).lower()
    if name not in PIPELINES:
        raise ValueError(f"pipeline must be one of {PIPELINES}, got {name!r}")
    return name


def check_frame_array(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_min_samples=2)
    if (X < 0).any():
        raise ValueError("intensities must be non-negative")
    return X
