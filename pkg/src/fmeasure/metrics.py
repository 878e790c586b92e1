"""Empirical and population F-measures.

Every F computation takes an explicit :class:`EmptyConvention`, which fixes
the value of F when nothing is predicted positive and nothing is positive
(the defining ratio is 0/0 there).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class EmptyConvention(enum.Enum):
    ONE_ON_EMPTY = "one"
    ZERO_ON_EMPTY = "zero"

    @property
    def empty_value(self) -> float:
        return 1.0 if self is EmptyConvention.ONE_ON_EMPTY else 0.0

    @classmethod
    def parse(cls, text: str) -> "EmptyConvention":
        text = text.strip().lower()
        for conv in cls:
            if text in (conv.value, conv.name.lower()):
                return conv
        raise ValueError(f"unknown empty convention {text!r} (use 'one' or 'zero')")


ONE_ON_EMPTY = EmptyConvention.ONE_ON_EMPTY
ZERO_ON_EMPTY = EmptyConvention.ZERO_ON_EMPTY


@dataclass(frozen=True)
class BinaryEval:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f: float

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class PopulationRates:
    """Joint probabilities P(Y=1, h=1), P(Y=0, h=1) and the prior P(Y=1)."""

    p11: float
    p01: float
    pi1: float

    def __post_init__(self):
        for name in ("p11", "p01", "pi1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        tol = 1e-12
        if self.p11 > self.pi1 + tol or self.p01 > 1.0 - self.pi1 + tol:
            raise ValueError(f"inconsistent rates {self}")


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not (beta > 0 and np.isfinite(beta)):
        raise ValueError(f"beta must be a positive finite real, got {beta}")
    return beta


def as_binary(v, name: str = "labels") -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int64)


def f_from_counts(tp, n_pred, n_pos, beta: float, conv: EmptyConvention = ONE_ON_EMPTY):
    """F_beta from true positives, predicted positives and actual positives.

    Works elementwise on arrays; the convention fills entries where both
    ``n_pred`` and ``n_pos`` are zero.
    """
    b2 = check_beta(beta) ** 2
    tp = np.asarray(tp, dtype=float)
    denom = b2 * np.asarray(n_pos, dtype=float) + np.asarray(n_pred, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = (1.0 + b2) * tp / denom
    # rounding in the denominator can overshoot 1 by an ulp
    f = np.where(denom == 0, conv.empty_value, np.minimum(f, 1.0))
    return f if f.ndim else float(f)


def evaluate_binary(s, y, beta: float = 1.0, conv: EmptyConvention = ONE_ON_EMPTY) -> BinaryEval:
    s = as_binary(s, "prediction")
    y = as_binary(y, "labels")
    if s.shape != y.shape:
        raise ValueError(f"length mismatch: {s.size} predictions vs {y.size} labels")
    tp = int(np.sum(s & y))
    fp = int(np.sum(s & (1 - y)))
    fn = int(np.sum((1 - s) & y))
    tn = int(s.size - tp - fp - fn)
    empty = conv.empty_value
    precision = tp / (tp + fp) if tp + fp else empty
    recall = tp / (tp + fn) if tp + fn else empty
    f = f_from_counts(tp, tp + fp, tp + fn, beta, conv)
    return BinaryEval(tp, fp, fn, tn, precision, recall, f)


def population_f(rates: PopulationRates, beta: float = 1.0,
                 conv: EmptyConvention = ONE_ON_EMPTY) -> float:
    b2 = check_beta(beta) ** 2
    denom = b2 * rates.pi1 + rates.p11 + rates.p01
    if denom == 0:
        return conv.empty_value
    return min((1.0 + b2) * rates.p11 / denom, 1.0)


def macro_f(per_label: Iterable[tuple[Sequence[int], Sequence[int]]], beta: float = 1.0,
            conv: EmptyConvention = ONE_ON_EMPTY) -> float:
    """Unweighted mean of per-label F_beta over ``(prediction, labels)`` pairs."""
    scores = [evaluate_binary(s, y, beta, conv).f for s, y in per_label]
    if not scores:
        raise ValueError("macro_f needs at least one label")
    return float(np.mean(scores))


def parse_beta(text: str):
    """Parse beta written as a decimal (float) or as an exact ratio ``q/r`` (Fraction)."""
    text = str(text).strip()
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            beta = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"invalid rational beta {text!r}") from None
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {text!r}")
        return beta
    try:
        return check_beta(float(text))
    except ValueError:
        raise ValueError(f"invalid beta {text!r}") from None


def format_beta(beta) -> str:
    if isinstance(beta, Fraction):
        return f"{beta.numerator}/{beta.denominator}"
    return format(float(beta), ".17g")
