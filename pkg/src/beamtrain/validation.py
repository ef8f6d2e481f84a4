"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .beamstats import BeamPmf, PmfError


def check_pairs(X, n_tx: int | None = None, n_rx: int | None = None) -> np.ndarray:
    """Validate an ``(n, 2)`` array of (tx, rx) beam indices."""
    X = check_array(X, dtype=None, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected (n, 2) beam pairs, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.integer):
        as_int = X.astype(np.int64)
        if not np.array_equal(as_int, X):
            raise ValueError("beam indices must be integers")
        X = as_int
    if X.min() < 0:
        raise ValueError("beam indices must be non-negative")
    if n_tx is not None and X[:, 0].max() >= n_tx:
        raise ValueError(f"Tx beam index out of range 0..{n_tx - 1}")
    if n_rx is not None and X[:, 1].max() >= n_rx:
        raise ValueError(f"Rx beam index out of range 0..{n_rx - 1}")
    return X


def check_pmf(pmf, prefix: str = "T") -> BeamPmf:
    """Accept a BeamPmf, a ``{"labels", "probs"}`` dict or a probability array."""
    if isinstance(pmf, BeamPmf):
        return pmf
    if isinstance(pmf, dict):
        return BeamPmf.from_dict(pmf)
    probs = np.asarray(pmf, dtype=float)
    if probs.ndim != 1:
        raise PmfError("a PMF must be one-dimensional")
    return BeamPmf.from_probs(probs, prefix=prefix)
