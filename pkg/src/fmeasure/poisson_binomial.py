"""Poisson-binomial mass functions as coefficients of prod_j (p_j x + 1 - p_j).

All products are built by convolving one Bernoulli factor at a time in
index-ascending order, so every route below (full coefficients, the prefix
table, the checkpointed reverse iterator) produces bit-identical rows.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np
from scipy.signal import lfilter

DEFLATE_EPS = 1e-6


class DeflationUnstable(ArithmeticError):
    """Synthetic division produced coefficients outside [-eps, 1 + eps]."""


def check_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("probabilities must be a one-dimensional sequence")
    if p.size and not ((p >= 0.0) & (p <= 1.0)).all():
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def convolve_factor(c: np.ndarray, p: float) -> np.ndarray:
    """Multiply the polynomial with coefficients ``c`` by ``p x + (1 - p)``."""
    out = np.empty(c.size + 1)
    out[:-1] = c * (1.0 - p)
    out[-1] = 0.0
    out[1:] += c * p
    return out


def pb_coefficients(p) -> np.ndarray:
    """c[i] = P(exactly i of the independent Bernoulli(p_j) are 1)."""
    c = np.ones(1)
    for pj in check_probs(p):
        c = convolve_factor(c, pj)
    return c


def pb_prefix_table(p) -> list[np.ndarray]:
    """Row k holds the coefficients for p[:k]; O(n^2) time and memory."""
    rows = [np.ones(1)]
    for pj in check_probs(p):
        rows.append(convolve_factor(rows[-1], pj))
    return rows


def iter_prefix_rows_reversed(p, block: int | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(k, row_k)`` for k = n, n-1, ..., 0.

    Same rows as :func:`pb_prefix_table` but only every ``block``-th row is
    kept; the rows in between are regenerated one block at a time. Memory is
    O(n * (n / block + block)), i.e. O(n^1.5) at the default block ~ sqrt(n),
    for about twice the convolution work.
    """
    p = check_probs(p)
    n = p.size
    if block is None:
        block = max(1, math.isqrt(n))
    checkpoints = {0: np.ones(1)}
    row = checkpoints[0]
    for k in range(1, n + 1):
        row = convolve_factor(row, p[k - 1])
        if k % block == 0:
            checkpoints[k] = row
    hi = n
    while hi >= 0:
        lo = (hi // block) * block
        rows = [checkpoints[lo]]
        for k in range(lo + 1, hi + 1):
            rows.append(convolve_factor(rows[-1], p[k - 1]))
        for k in range(hi, lo - 1, -1):
            yield k, rows[k - lo]
        del rows
        checkpoints.pop(lo, None)
        hi = lo - 1


def pb_deflate(c, p_k: float, eps: float = DEFLATE_EPS) -> np.ndarray:
    """Divide the polynomial ``c`` by ``p_k x + (1 - p_k)``.

    The recurrence is run forward (low to high degree) when p_k <= 1/2 and
    backward otherwise, so the error gain per step, max(p, 1-p)/min(p, 1-p)
    in the wrong direction, is at most 1. p_k = 1 reduces to an index shift.

    Raises DeflationUnstable when a quotient coefficient falls outside
    [-eps, 1 + eps]; callers are expected to fall back to rebuilding the
    product from the prefix.
    """
    c = np.asarray(c, dtype=float)
    if c.size < 2:
        raise ValueError("cannot deflate a constant polynomial")
    if not 0.0 <= p_k <= 1.0:
        raise ValueError(f"p_k={p_k} outside [0, 1]")
    m = c.size - 1
    if p_k <= 0.5:
        # c[i] = (1-p) q[i] + p q[i-1]
        q = lfilter([1.0 / (1.0 - p_k)], [1.0, p_k / (1.0 - p_k)], c[:m])
    else:
        # c[i] = p q[i-1] + (1-p) q[i], solved from the top coefficient down
        q = lfilter([1.0 / p_k], [1.0, (1.0 - p_k) / p_k], c[:0:-1])[::-1]
    if not ((q >= -eps) & (q <= 1.0 + eps)).all():
        raise DeflationUnstable(f"deflation by p={p_k} left coefficients outside [-{eps}, 1+{eps}]")
    return np.ascontiguousarray(q)
