"""Decision-theoretic prediction: label sets with maximum expected F_beta.

Labels are assumed independent given the inputs, with ``p[i] = P(y_i = 1)``.
Any optimal prediction marks a top-k prefix of the instances ranked by p
as positive, so it suffices to tabulate

    f[k] = E[F_beta(top-k mask, y)],   k = 0..n

and take the argmax. Three routes compute the table:

* :func:`expected_f_exact` / :func:`expected_f_all_masks` enumerate all
  2^n label vectors (oracle scale only);
* :func:`expected_f_table_cubic` uses the double sum over true positives
  inside and outside the prefix, O(n^3);
* :func:`expected_f_table_quadratic` is the O((q + r) n^2) recurrence for
  rational beta^2 = q / r.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .metrics import ONE_ON_EMPTY, EmptyConvention, check_beta, f_from_counts
from .poisson_binomial import (
    DeflationUnstable,
    check_probs,
    iter_prefix_rows_reversed,
    pb_coefficients,
    pb_deflate,
)

MAX_EXACT_N = 25
MAX_DENOMINATOR = 100

Strategy = Literal["prefix", "deflate"]


@dataclass(frozen=True)
class OptimalPrediction:
    k_star: int
    mask: np.ndarray
    expected_f: float
    table: np.ndarray
    order: np.ndarray


def _as_fraction(betasq) -> Fraction:
    if isinstance(betasq, tuple):
        q, r = betasq
        if int(q) != q or int(r) != r:
            raise ValueError("q and r must be integers")
        if q <= 0 or r <= 0:
            raise ValueError(f"q and r must be positive, got {q}/{r}")
        return Fraction(int(q), int(r))
    frac = Fraction(betasq)
    if frac <= 0:
        raise ValueError(f"beta^2 must be positive, got {frac}")
    return frac


def rational_betasq(beta, max_denominator: int = MAX_DENOMINATOR,
                    approximate: bool = False) -> Fraction | None:
    """beta^2 as a reduced fraction, or None when it is not a small rational.

    A :class:`~fractions.Fraction` beta is squared exactly. A float is matched
    against the closest fraction with denominator <= ``max_denominator`` and
    accepted only within a few ulps, unless ``approximate`` is set.
    """
    if isinstance(beta, Fraction):
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        return beta * beta
    b2 = check_beta(beta) ** 2
    frac = Fraction(b2).limit_denominator(max_denominator)
    if frac <= 0:
        frac = Fraction(1, max_denominator)
    if approximate or abs(float(frac) - b2) <= 4 * np.finfo(float).eps * max(1.0, b2):
        return frac
    return None


def _check_sorted(p: np.ndarray):
    if p.size > 1 and np.any(np.diff(p) > 0):
        raise ValueError("probabilities must be sorted in descending order")


def _empty_term(p: np.ndarray, conv: EmptyConvention) -> float:
    # with nothing predicted, F = 1 only if no label is positive (ONE_ON_EMPTY)
    if conv is ONE_ON_EMPTY:
        return float(np.prod(1.0 - p))
    return 0.0


def _all_label_vectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    ys = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64).reshape(-1, n)
    return ys, ys.sum(axis=1)


def _label_vector_probs(p: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.prod(np.where(ys == 1, p, 1.0 - p), axis=1)


def expected_f_exact(p, s, beta: float = 1.0, conv: EmptyConvention = ONE_ON_EMPTY) -> float:
    """E[F_beta(s, y)] by enumerating all 2^n label vectors."""
    p = check_probs(p)
    s = np.asarray(s, dtype=np.int64)
    if s.shape != p.shape:
        raise ValueError("prediction and probability vectors differ in length")
    if p.size > MAX_EXACT_N:
        raise ValueError(f"n={p.size} too large for enumeration (max {MAX_EXACT_N})")
    ys, ysum = _all_label_vectors(p.size)
    probs = _label_vector_probs(p, ys)
    f = f_from_counts(ys @ s, s.sum(), ysum, beta, conv)
    return float(np.dot(probs, f))


def expected_f_all_masks(p, beta: float = 1.0, conv: EmptyConvention = ONE_ON_EMPTY,
                         chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Expected F for every one of the 2^n masks.

    Returns ``(masks, values)`` with masks in the same enumeration order as
    the label vectors. Brute force, intended for n <= 12.
    """
    p = check_probs(p)
    if p.size > 14:
        raise ValueError("expected_f_all_masks is limited to n <= 14")
    ys, ysum = _all_label_vectors(p.size)
    probs = _label_vector_probs(p, ys)
    values = np.empty(len(ys))
    for start in range(0, len(ys), chunk):
        masks = ys[start:start + chunk]
        tp = masks @ ys.T
        f = f_from_counts(tp, masks.sum(axis=1)[:, None], ysum[None, :], beta, conv)
        values[start:start + chunk] = f @ probs
    return ys, values


def expected_f_table_cubic(p, beta: float = 1.0, conv: EmptyConvention = ONE_ON_EMPTY) -> np.ndarray:
    """f[k] from the double sum over true positives inside/outside the prefix."""
    p = check_probs(p)
    _check_sorted(p)
    b2 = check_beta(beta) ** 2
    n = p.size
    f = np.empty(n + 1)
    f[0] = _empty_term(p, conv)
    for k in range(1, n + 1):
        inside = pb_coefficients(p[:k])
        outside = pb_coefficients(p[k:])
        k1 = np.arange(k + 1)[:, None]
        k2 = np.arange(n - k + 1)[None, :]
        terms = inside[:, None] * outside[None, :] * (1.0 + b2) * k1 / (k + b2 * (k1 + k2))
        f[k] = terms.sum()
    return f


def expected_f_table_quadratic(p, betasq, conv: EmptyConvention = ONE_ON_EMPTY,
                               strategy: Strategy = "prefix") -> np.ndarray:
    """f[k] for k = 0..n when beta^2 = q / r is rational.

    ``betasq`` is a Fraction (or anything Fraction accepts) or a ``(q, r)``
    pair. With ``S[i] = s(k, i / q)`` where
    ``s(k, a) = sum_j P(#positives among p[k:] = j) / (a + j)``,

        f[k] = sum_{k1} (1 + r/q) k1 P(#positives among p[:k] = k1) S[r k + q k1]

    and S is rolled from k to k-1 by ``S[i] <- (1-p_k) S[i] + p_k S[i+q]``.

    The prefix coefficients come either from a checkpointed prefix table
    (``strategy="prefix"``, the default) or from repeated deflation of the
    full product (``"deflate"``); deflation switches to the prefix table the
    first time it is flagged unstable.
    """
    p = check_probs(p)
    _check_sorted(p)
    frac = _as_fraction(betasq)
    q, r = frac.numerator, frac.denominator
    if strategy not in ("prefix", "deflate"):
        raise ValueError(f"unknown coefficient strategy {strategy!r}")
    n = p.size
    f = np.empty(n + 1)
    f[0] = _empty_term(p, conv)
    if n == 0:
        return f

    # S[0] is unused; S[i] = s(n, i/q) = q / i initially
    size = (q + r) * n
    S = np.empty(size + 1)
    S[0] = np.nan
    S[1:] = q / np.arange(1, size + 1, dtype=float)
    scale = 1.0 + r / q

    rows = _coefficient_rows(p, strategy)
    for k in range(n, 0, -1):
        C = rows(k)
        k1 = np.arange(k + 1, dtype=float)
        f[k] = scale * np.sum(k1 * C * S[r * k: r * k + q * k + 1: q])
        m = (q + r) * (k - 1)
        if m:
            pk = p[k - 1]
            S[1:m + 1] = (1.0 - pk) * S[1:m + 1] + pk * S[1 + q:m + q + 1]
    return f


def _coefficient_rows(p: np.ndarray, strategy: str):
    """Return a callable k -> P(#positives among p[:k] = .), queried for k = n..1."""
    prefix = iter_prefix_rows_reversed(p)
    if strategy == "prefix":
        def rows(k):
            kk, row = next(prefix)
            assert kk == k
            return row
        return rows

    state = {"C": pb_coefficients(p), "k": p.size, "fallback": None}

    def rows(k):
        if state["fallback"] is not None:
            return state["fallback"](k)
        while state["k"] > k:
            try:
                state["C"] = pb_deflate(state["C"], p[state["k"] - 1])
            except DeflationUnstable:
                fresh = iter_prefix_rows_reversed(p[:state["k"] - 1])

                def fallback(kk):
                    got, row = next(fresh)
                    assert got == kk
                    return row
                state["fallback"] = fallback
                return fallback(k)
            state["k"] -= 1
        return state["C"]
    return rows


def optimal_prediction(p, beta=1.0, conv: EmptyConvention = ONE_ON_EMPTY, *,
                       approximate_rational: bool = False,
                       strategy: Strategy = "prefix") -> OptimalPrediction:
    """The expected-F-maximizing prediction for one batch.

    Instances are ranked by descending p (stable, so ties keep their input
    order); the first k_star are predicted positive, with k_star the
    smallest maximizer of the expected-F table. ``beta`` may be a float or
    an exact Fraction; beta^2 that is not a small rational is handled by the
    cubic route unless ``approximate_rational`` asks for the nearest q/r.
    """
    p = check_probs(p)
    order = np.argsort(-p, kind="stable")
    ps = p[order]
    frac = rational_betasq(beta, approximate=approximate_rational)
    if frac is not None:
        table = expected_f_table_quadratic(ps, frac, conv, strategy=strategy)
    else:
        table = expected_f_table_cubic(ps, float(beta), conv)
    k_star = int(np.argmax(table))
    mask = np.zeros(p.size, dtype=np.int64)
    mask[order[:k_star]] = 1
    return OptimalPrediction(k_star, mask, float(table[k_star]), table, order)
