"""Convergence bounds for empirical F_beta, with checks by simulation and enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .metrics import (
    ONE_ON_EMPTY,
    EmptyConvention,
    PopulationRates,
    check_beta,
    evaluate_binary,
    f_from_counts,
    population_f,
)

REFERENCE_DRAW = 1_000_000


@dataclass(frozen=True)
class BoundInputs:
    n: int
    eta: float
    beta: float = 1.0
    pi1: float = 0.5
    d: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        check_beta(self.beta)
        if not 0 < self.pi1 <= 1:
            raise ValueError("pi1 must lie in (0, 1]")
        if self.d < 1:
            raise ValueError("d must be >= 1")


def _bound(r: float, inp: BoundInputs, factor: float) -> float | None:
    b2 = inp.beta**2
    if r >= b2 * inp.pi1 / (2 * (1 + b2)):
        return None
    return factor * (1 + b2) * r / (b2 * inp.pi1 - 2 * (1 + b2) * r)


def lemma2_radius(n: int, eta: float) -> float:
    return math.sqrt(math.log(6 / eta) / (2 * n))


def theorem3_radius(n: int, eta: float, d: int) -> float:
    return math.sqrt((math.log(12 / eta) + d * math.log(2 * math.e * n / d)) / n)


def lemma2_bound(inp: BoundInputs) -> float | None:
    """Deviation bound |F_{beta,n}(h) - F_beta(h)| for one fixed classifier.

    Holds with probability >= 1 - eta. Returns None when n is too small for
    the bound to apply.
    """
    return _bound(lemma2_radius(inp.n, inp.eta), inp, 3.0)


def theorem3_bound(inp: BoundInputs) -> float | None:
    """Regret bound F_beta(best in class) - F_beta(empirical maximizer), VC dimension d."""
    if inp.d > inp.n:
        raise ValueError("VC dimension d must not exceed n")
    return _bound(theorem3_radius(inp.n, inp.eta, inp.d), inp, 6.0)


@dataclass(frozen=True)
class FiniteDomain:
    masses: np.ndarray
    eta1: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        e = np.asarray(self.eta1, dtype=float)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "eta1", e)
        if m.shape != e.shape or m.ndim != 1:
            raise ValueError("masses and eta1 must be 1-d and equally long")
        if (m <= 0).any() or abs(m.sum() - 1.0) > 1e-12:
            raise ValueError("masses must be positive and sum to 1")
        if ((e < 0) | (e > 1)).any():
            raise ValueError("eta1 must lie in [0, 1]")

    def __len__(self):
        return self.masses.size

    def rates(self, members) -> PopulationRates:
        members = np.asarray(members, dtype=bool)
        return PopulationRates(
            float(np.sum(self.masses[members] * self.eta1[members])),
            float(np.sum(self.masses[members] * (1 - self.eta1[members]))),
            float(np.sum(self.masses * self.eta1)),
        )


def finite_domain_bruteforce(dom: FiniteDomain, beta: float = 1.0,
                             conv: EmptyConvention = ONE_ON_EMPTY, max_atoms: int = 20):
    """Best population F_beta over all 2^m classifiers on an m-atom domain.

    Returns ``(best_f, best_set)`` with ``best_set`` a tuple of atom indices;
    near-ties (1e-12) go to the smaller set, then to enumeration order.
    """
    m = len(dom)
    if m > max_atoms:
        raise ValueError(f"domain has {m} atoms; enumeration is limited to {max_atoms}")
    pos = dom.masses * dom.eta1
    neg = dom.masses * (1 - dom.eta1)
    pi1 = pos.sum()
    bits = 1 << np.arange(m)
    codes = np.arange(1 << m)
    f = np.empty(codes.size)
    sizes = np.empty(codes.size, dtype=np.int64)
    for start in range(0, codes.size, 1 << 16):
        block = codes[start:start + (1 << 16)]
        masks = (block[:, None] & bits) != 0
        p11 = masks @ pos
        p01 = masks @ neg
        f[block] = f_from_counts(p11, p11 + p01, pi1, beta, conv)
        sizes[block] = masks.sum(axis=1)
    best_f = float(f.max())
    tied = np.flatnonzero(f >= best_f - 1e-12)
    code = int(tied[np.lexsort((tied, sizes[tied]))[0]])
    best_set = tuple(i for i in range(m) if code >> i & 1)
    return best_f, best_set


def best_threshold_classifier(dom: FiniteDomain, beta: float = 1.0,
                              conv: EmptyConvention = ONE_ON_EMPTY, scores=None):
    """Best classifier of the form score(x) >= t (or > t) over all cuts.

    ``scores`` defaults to eta1. Returns ``(best_f, best_set)``.
    """
    scores = dom.eta1 if scores is None else np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    ss = scores[order]
    ks = np.unique(np.concatenate([[0], np.flatnonzero(ss[:-1] != ss[1:]) + 1, [len(dom)]]))
    pos = np.concatenate([[0.0], np.cumsum((dom.masses * dom.eta1)[order])])
    neg = np.concatenate([[0.0], np.cumsum((dom.masses * (1 - dom.eta1))[order])])
    pi1 = float(np.sum(dom.masses * dom.eta1))
    f = np.atleast_1d(f_from_counts(pos[ks], pos[ks] + neg[ks], pi1, beta, conv))
    best = int(np.argmax(f))
    return float(f[best]), tuple(sorted(int(i) for i in order[:ks[best]]))


class Distribution(Protocol):
    def draw(self, n: int, seed) -> tuple[np.ndarray, np.ndarray]: ...


def reference_f(dist, theta: Callable, beta: float, seed: int) -> float:
    """F_beta(theta) analytically when the distribution supports it, else by a 10^6 draw."""
    if hasattr(dist, "population_rates"):
        return population_f(dist.population_rates(theta), beta)
    xs, ys = dist.draw(REFERENCE_DRAW, seed)
    return evaluate_binary(theta(xs), ys, beta).f


def monte_carlo_bound_check(dist, theta: Callable, inp: BoundInputs, trials: int = 1000,
                            seed: int = 0, bound_scale: float = 1.0) -> float:
    """Fraction of ``trials`` samples of size n whose empirical F deviates beyond the bound.

    Trial ``i`` draws with seed ``seed + i``. ``bound_scale`` < 1 shrinks the
    bound for diagnostics.
    """
    bound = lemma2_bound(inp)
    if bound is None:
        raise ValueError(f"lemma2 bound is not applicable at n={inp.n}")
    bound *= bound_scale
    target = reference_f(dist, theta, inp.beta, seed + trials)
    violations = 0
    for t in range(trials):
        xs, ys = dist.draw(inp.n, seed + t)
        f_n = evaluate_binary(theta(xs), ys, inp.beta).f
        violations += abs(f_n - target) >= bound
    return violations / trials
