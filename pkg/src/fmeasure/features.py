"""Feature maps for the linear-logistic models.

r0: coordinates only; r1: coordinates plus a constant 1; r2: r1 plus every
degree-two monomial x_i x_j (i <= j, lexicographic). ``identity`` passes
dataset columns through unchanged and behaves like r0.
"""

from __future__ import annotations

import numpy as np

FEATURE_MAPS = ("r0", "r1", "r2", "identity")


def check_map(kind: str) -> str:
    kind = kind.lower()
    if kind not in FEATURE_MAPS:
        raise ValueError(f"unknown feature map {kind!r}; expected one of {FEATURE_MAPS}")
    return kind


def feature_dim(kind: str, d: int) -> int:
    kind = check_map(kind)
    if kind in ("r0", "identity"):
        return d
    if kind == "r1":
        return d + 1
    return d + 1 + d * (d + 1) // 2


def featurize(kind: str, x) -> np.ndarray:
    """Apply a feature map to one vector or to the rows of a matrix."""
    kind = check_map(kind)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if kind in ("r0", "identity"):
        out = X.copy()
    else:
        ones = np.ones((X.shape[0], 1))
        parts = [X, ones]
        if kind == "r2":
            i, j = np.triu_indices(X.shape[1])
            parts.append(X[:, i] * X[:, j])
        out = np.hstack(parts)
    return out[0] if single else out
