"""Empirical utility maximization with linear-logistic models.

Three learners share this module:

* ``ML_DELTA``: maximum-likelihood logistic regression, then the threshold on
  its training probabilities that maximizes training F_beta;
* ``F_DELTA``: logistic regression trained on the soft F_beta (predictions
  replaced by probabilities), started from the ML fit, then thresholded the
  same way;
* ``ML_E``: the ML fit alone; prediction is decision-theoretic over the whole
  test batch (see :mod:`fmeasure.dta`).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import expit

from .dta import optimal_prediction
from .features import check_map, featurize
from .metrics import (
    ONE_ON_EMPTY,
    EmptyConvention,
    as_binary,
    check_beta,
    evaluate_binary,
    f_from_counts,
    format_beta,
    parse_beta,
)

log = logging.getLogger(__name__)


class Method(enum.Enum):
    ML_DELTA = "ml-delta"
    F_DELTA = "f-delta"
    ML_E = "ml-e"


class Orientation(enum.Enum):
    STRICT = "strict"  # predict 1 iff score > delta
    INCLUSIVE = "inclusive"  # predict 1 iff score >= delta


class TrainingDiverged(ArithmeticError):
    pass


@dataclass
class LinearModel:
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.isfinite(self.weights).all():
            raise ValueError("model weights must be finite")

    @classmethod
    def zeros(cls, dim: int) -> "LinearModel":
        return cls(np.zeros(dim))


def _weights(model) -> np.ndarray:
    return model.weights if isinstance(model, LinearModel) else np.asarray(model, dtype=float)


def predict_proba(model, features) -> np.ndarray | float:
    """sigma(w . x) for one feature vector or for each row of a matrix."""
    w = _weights(model)
    x = np.asarray(features, dtype=float)
    if x.shape[-1] != w.size:
        raise ValueError(f"feature dimension {x.shape[-1]} != model dimension {w.size}")
    out = expit(x @ w)
    return float(out) if out.ndim == 0 else out


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = as_binary(y)
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows vs {y.size} labels")
    return X, y.astype(float)


def nll_objective(model, X, y, lam: float = 0.0) -> tuple[float, np.ndarray]:
    """Regularized negative log-likelihood and its gradient.

    Uses log(1 + e^z) - y z, which equals -[y log p + (1-y) log(1-p)] without
    ever taking the log of a rounded-to-zero probability.
    """
    w = _weights(model)
    X, y = _check_xy(X, y)
    z = X @ w
    value = float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * (w @ w))
    grad = X.T @ (expit(z) - y) + lam * w
    return value, grad


def softf_objective(model, X, y, beta: float = 1.0, lam: float = 0.0) -> tuple[float, np.ndarray]:
    """Soft F_beta (to be maximized) and its gradient.

    value = (1 + b^2) sum p_i y_i / (b^2 sum y_i + sum p_i), with an optional
    -(lam/2)|w|^2 penalty.
    """
    w = _weights(model)
    X, y = _check_xy(X, y)
    b2 = check_beta(beta) ** 2
    p = expit(X @ w)
    num = np.sum(p * y)
    den = b2 * np.sum(y) + np.sum(p)
    dp = (p * (1.0 - p))[:, None] * X
    dnum = y @ dp
    dden = dp.sum(axis=0)
    value = (1.0 + b2) * num / den - 0.5 * lam * (w @ w)
    grad = (1.0 + b2) * (dnum * den - num * dden) / den**2 - lam * w
    return float(value), grad


@dataclass(frozen=True)
class NLL:
    lam: float = 1.0

    def loss(self, w, X, y):
        return nll_objective(w, X, y, self.lam)


@dataclass(frozen=True)
class SoftF:
    beta: float = 1.0
    lam: float = 0.0

    def loss(self, w, X, y):
        value, grad = softf_objective(w, X, y, self.beta, self.lam)
        return -value, -grad


@dataclass
class TrainOptions:
    max_iter: int = 500
    tol: float = 1e-6
    init: np.ndarray | None = None
    memory: int = 10


@dataclass
class TrainInfo:
    iterations: int
    value: float
    grad_norm: float
    converged: bool
    history: list = field(default_factory=list)


def minimize_lbfgs(fg, x0, opts: TrainOptions) -> tuple[np.ndarray, TrainInfo]:
    """Limited-memory BFGS with Armijo backtracking.

    Stops when |grad| <= tol * max(1, |f|) or after ``max_iter`` iterations.
    Trial points with non-finite loss are treated as failed steps and the
    step is halved; if the starting point or every trial is non-finite the
    run is reported as diverged.
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise TrainingDiverged("objective is not finite at the initial point")
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    history = [f]
    it = 0
    converged = False
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= opts.tol * max(1.0, abs(f)):
            converged = True
            break
        if it >= opts.max_iter:
            break
        d = _two_loop(g, s_hist, y_hist)
        if g @ d >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
        step = 1.0 if s_hist else min(1.0, 1.0 / gnorm)
        slope = float(g @ d)
        accepted = False
        any_finite = False
        for _ in range(60):
            x_new = x + step * d
            f_new, g_new = fg(x_new)
            if np.isfinite(f_new) and np.isfinite(g_new).all():
                any_finite = True
                if f_new <= f + 1e-4 * step * slope:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            if not any_finite:
                raise TrainingDiverged(f"line search found no finite point at iteration {it}")
            if s_hist:
                s_hist.clear()
                y_hist.clear()
                continue
            # no descent along -g at any step: stationary to working precision
            converged = True
            break
        s, yv = x_new - x, g_new - g
        if s @ yv > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_hist.append(s)
            y_hist.append(yv)
            if len(s_hist) > opts.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        it += 1
    return x, TrainInfo(it, float(f), float(np.linalg.norm(g)), converged, history)


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def train(objective, X, y, opts: TrainOptions | None = None) -> LinearModel:
    """Fit a linear-logistic model; SoftF is maximized, NLL minimized."""
    opts = opts or TrainOptions()
    X, yf = _check_xy(X, y)
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    x0 = np.zeros(X.shape[1]) if opts.init is None else np.asarray(opts.init, dtype=float)
    if x0.size != X.shape[1]:
        raise ValueError("initial point has the wrong dimension")
    w, info = minimize_lbfgs(lambda w: objective.loss(w, X, yf), x0, opts)
    if not info.converged:
        log.info("%s stopped after %d iterations, |grad|=%.3g", objective, info.iterations, info.grad_norm)
    return LinearModel(w)


@dataclass(frozen=True)
class ThresholdChoice:
    delta: float
    orientation: Orientation
    train_f: float

    def apply(self, scores) -> np.ndarray:
        scores = np.asarray(scores, dtype=float)
        if self.orientation is Orientation.INCLUSIVE:
            return (scores >= self.delta).astype(np.int64)
        return (scores > self.delta).astype(np.int64)


def threshold_sweep(scores, y, beta: float = 1.0, conv: EmptyConvention = ONE_ON_EMPTY) -> ThresholdChoice:
    """Threshold maximizing empirical F_beta over every distinct cut.

    Candidates are the empty prediction and every top-k prefix ending at a
    change of score, so tied scores are always split consistently. Among
    maximizers the one predicting fewest positives wins, expressed as an
    INCLUSIVE threshold at the lowest included score (the empty prediction
    is INCLUSIVE at +inf).
    """
    scores = np.asarray(scores, dtype=float)
    y = as_binary(y)
    if scores.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n = scores.size
    order = np.argsort(-scores, kind="stable")
    ss = scores[order]
    tp_cum = np.concatenate([[0], np.cumsum(y[order])])
    ends = np.flatnonzero(ss[:-1] != ss[1:]) + 1
    ks = np.concatenate([[0], ends, [n]]) if n else np.array([0])
    ks = np.unique(ks)
    f = np.atleast_1d(f_from_counts(tp_cum[ks], ks, y.sum(), beta, conv))
    best = int(np.argmax(f))
    k = int(ks[best])
    delta = float(ss[k - 1]) if k else float("inf")
    return ThresholdChoice(delta, Orientation.INCLUSIVE, float(f[best]))


@dataclass
class FittedMethod:
    method: Method
    model: LinearModel
    threshold: ThresholdChoice | None
    beta: float | Fraction = 1.0
    feature_map: str = "identity"
    lam: float = 1.0
    conv: EmptyConvention = ONE_ON_EMPTY

    def __post_init__(self):
        if (self.method is Method.ML_E) != (self.threshold is None):
            raise ValueError("ML_E carries no threshold; the other methods need one")


def fit_method(method: Method | str, X, y, beta=1.0, lam: float = 1.0,
               opts: TrainOptions | None = None, *, feature_map: str = "identity",
               conv: EmptyConvention = ONE_ON_EMPTY, softf_lam: float = 0.0,
               fixed_half_threshold: bool = False) -> FittedMethod:
    """Train one of the three learners on raw inputs ``X``.

    ``feature_map`` is applied to ``X`` here and again in :func:`apply_method`.
    ``fixed_half_threshold`` makes F_DELTA use the fixed rule p > 0.5 instead
    of sweeping the threshold on training data.
    """
    method = Method(method)
    feature_map = check_map(feature_map)
    opts = opts or TrainOptions()
    Z = featurize(feature_map, X)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    model = train(NLL(lam), Z, y, opts)
    if method is Method.ML_E:
        return FittedMethod(method, model, None, beta, feature_map, lam, conv)
    if method is Method.F_DELTA:
        f_opts = TrainOptions(opts.max_iter, opts.tol, model.weights, opts.memory)
        model = train(SoftF(float(beta), softf_lam), Z, y, f_opts)
    probs = predict_proba(model, Z)
    if method is Method.F_DELTA and fixed_half_threshold:
        rule = ThresholdChoice(0.5, Orientation.STRICT, 0.0)
        train_f = evaluate_binary(rule.apply(probs), y, float(beta), conv).f
        threshold = ThresholdChoice(0.5, Orientation.STRICT, train_f)
    else:
        threshold = threshold_sweep(probs, y, float(beta), conv)
    return FittedMethod(method, model, threshold, beta, feature_map, lam, conv)


def method_probabilities(fitted: FittedMethod, X) -> np.ndarray:
    return np.atleast_1d(predict_proba(fitted.model, featurize(fitted.feature_map, np.atleast_2d(X))))


def apply_method(fitted: FittedMethod, X) -> np.ndarray:
    """Predict labels for a batch; ML_E treats the whole batch as one decision."""
    probs = method_probabilities(fitted, X)
    if fitted.method is Method.ML_E:
        return optimal_prediction(probs, fitted.beta, fitted.conv).mask
    return fitted.threshold.apply(probs)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(fitted: FittedMethod, path) -> None:
    lines = [
        f"beta={format_beta(fitted.beta)}",
        f"method={fitted.method.value}",
        f"feature_map={fitted.feature_map}",
    ]
    if fitted.threshold is not None:
        lines.append(f"threshold={_fmt(fitted.threshold.delta)}")
        lines.append(f"orientation={fitted.threshold.orientation.value}")
        lines.append(f"train_f={_fmt(fitted.threshold.train_f)}")
    lines.append(f"lambda={_fmt(fitted.lam)}")
    lines.append(f"convention={fitted.conv.value}")
    lines.extend(f"w{i}={_fmt(w)}" for i, w in enumerate(fitted.model.weights))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> FittedMethod:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        fields[key.strip()] = value.strip()
    try:
        method = Method(fields["method"])
        weights = []
        i = 0
        while f"w{i}" in fields:
            weights.append(float(fields[f"w{i}"]))
            i += 1
        if not weights:
            raise ValueError("model file has no weights")
        threshold = None
        if "threshold" in fields:
            threshold = ThresholdChoice(
                float(fields["threshold"]),
                Orientation(fields.get("orientation", "inclusive")),
                float(fields.get("train_f", "nan")),
            )
        return FittedMethod(
            method,
            LinearModel(np.array(weights)),
            threshold,
            parse_beta(fields.get("beta", "1")),
            check_map(fields.get("feature_map", "identity")),
            float(fields.get("lambda", "1")),
            EmptyConvention.parse(fields.get("convention", "one")),
        )
    except KeyError as exc:
        raise ValueError(f"model file missing field {exc}") from None
