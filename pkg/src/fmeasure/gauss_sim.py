"""Two-class Gaussian mixture benchmark.

Class y has prior pi1 (y=1) and density N(mu_y, I_D) with

    mu_1 = (S + O) 1 / sqrt(4D),    mu_0 = -(S - O) 1 / sqrt(4D),

so S is the distance between the centres and O shifts both away from the
origin. Projected onto u = 1 / sqrt(D) the classes are unit-variance normals
at (S + O)/2 and -(S - O)/2, which is all the optimal-F computation needs.

Randomness: numpy's PCG64 bit generator seeded through SeedSequence from an
int or a tuple of ints; normal variates come from numpy's ziggurat sampler
(``Generator.standard_normal``), uniform labels from ``Generator.random``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .dta import optimal_prediction
from .eum import (
    FittedMethod,
    Method,
    TrainOptions,
    apply_method,
    fit_method,
    method_probabilities,
    predict_proba,
)
from .features import FEATURE_MAPS, featurize
from .metrics import ONE_ON_EMPTY, EmptyConvention, PopulationRates, evaluate_binary, population_f


@dataclass(frozen=True)
class GaussianMixtureSpec:
    D: int = 10
    S: float = 4.0
    O: float = 0.0
    pi1: float = 0.5

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 1:
            raise ValueError(f"D must be a positive integer, got {self.D}")
        if self.S < 0 or self.O < 0:
            raise ValueError("S and O must be non-negative")
        if not 0 < self.pi1 < 1:
            raise ValueError(f"pi1 must lie in (0, 1), got {self.pi1}")

    @property
    def m1(self) -> float:
        """Class-1 mean along 1/sqrt(D)."""
        return (self.S + self.O) / 2

    @property
    def m0(self) -> float:
        return -(self.S - self.O) / 2

    @property
    def mu1(self) -> np.ndarray:
        return np.full(self.D, (self.S + self.O) / math.sqrt(4 * self.D))

    @property
    def mu0(self) -> np.ndarray:
        return np.full(self.D, -(self.S - self.O) / math.sqrt(4 * self.D))

    def posterior_params(self) -> tuple[np.ndarray, float]:
        """(w, b) with P(Y=1 | x) = sigmoid(w . x + b)."""
        w = np.full(self.D, self.S / math.sqrt(self.D))
        b = math.log(self.pi1 / (1 - self.pi1)) - self.S * self.O / 2
        return w, b

    def draw(self, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
        s = sample(self, n, seed)
        return s.xs, s.ys

    def population_rates(self, classifier: "LinearThreshold") -> PopulationRates:
        norm_w = float(np.linalg.norm(classifier.w))
        hit1 = norm.sf(-(self.mu1 @ classifier.w + classifier.b) / norm_w)
        hit0 = norm.sf(-(self.mu0 @ classifier.w + classifier.b) / norm_w)
        return PopulationRates(self.pi1 * hit1, (1 - self.pi1) * hit0, self.pi1)


@dataclass(frozen=True)
class LinearThreshold:
    """Classifier predicting 1 iff w . x + b > 0."""

    w: np.ndarray
    b: float

    def __call__(self, xs) -> np.ndarray:
        return (np.asarray(xs) @ self.w + self.b > 0).astype(np.int64)

    @classmethod
    def midpoint(cls, spec: GaussianMixtureSpec) -> "LinearThreshold":
        return cls(np.full(spec.D, 1 / math.sqrt(spec.D)), -(spec.m0 + spec.m1) / 2)


@dataclass
class LabeledSample:
    xs: np.ndarray
    ys: np.ndarray
    seed: object


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, (tuple, list)):
        seed = [int(s) for s in seed]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample(spec: GaussianMixtureSpec, n: int, seed) -> LabeledSample:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    ys = (rng.random(n) < spec.pi1).astype(np.int64)
    xs = rng.standard_normal((n, spec.D))
    xs += np.where(ys[:, None] == 1, spec.mu1, spec.mu0)
    return LabeledSample(xs, ys, seed)


def sample_filtered(spec: GaussianMixtureSpec, n: int, seed, max_posterior: float = 0.5,
                    batch: int = 10_000) -> LabeledSample:
    """Rejection sample n points whose true P(Y=1 | x) is below ``max_posterior``."""
    rng = _rng(seed)
    xs_parts, ys_parts, have = [], [], 0
    while have < n:
        ys = (rng.random(batch) < spec.pi1).astype(np.int64)
        xs = rng.standard_normal((batch, spec.D)) + np.where(ys[:, None] == 1, spec.mu1, spec.mu0)
        keep = true_posterior(spec, xs) < max_posterior
        xs_parts.append(xs[keep])
        ys_parts.append(ys[keep])
        have += int(keep.sum())
    return LabeledSample(np.vstack(xs_parts)[:n], np.concatenate(ys_parts)[:n], seed)


def true_posterior(spec: GaussianMixtureSpec, x) -> np.ndarray | float:
    w, b = spec.posterior_params()
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.D:
        raise ValueError(f"expected {spec.D}-dimensional inputs, got {x.shape[-1]}")
    out = expit(x @ w + b)
    return float(out) if out.ndim == 0 else out


def _projected_f(spec: GaussianMixtureSpec, t: float, beta: float) -> float:
    rates = PopulationRates(spec.pi1 * norm.sf(t - spec.m1), (1 - spec.pi1) * norm.sf(t - spec.m0), spec.pi1)
    return float(population_f(rates, beta))


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-8) -> float:
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return (a + b) / 2


def theoretical_optimal_f(spec: GaussianMixtureSpec, beta: float = 1.0) -> tuple[float, float]:
    """Best population F_beta over all classifiers: ``(t_star, f_star)``.

    The optimum thresholds the projection onto 1/sqrt(D) at ``t_star``. A
    coarse grid locates the peak, then golden-section search refines it.
    """
    if spec.S <= 0:
        raise ValueError("S = 0 leaves the classes indistinguishable")
    lo, hi = spec.m0 - 10, spec.m1 + 10
    grid = np.linspace(lo, hi, 401)
    vals = [_projected_f(spec, t, beta) for t in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    t_star = golden_section_max(lambda t: _projected_f(spec, t, beta),
                                max(lo, grid[i] - step), min(hi, grid[i] + step))
    return float(t_star), float(_projected_f(spec, t_star, beta))


def optimal_posterior_threshold(spec: GaussianMixtureSpec, beta: float = 1.0) -> float:
    """The optimal projection threshold expressed on the posterior scale."""
    t_star, _ = theoretical_optimal_f(spec, beta)
    _, b = spec.posterior_params()
    return float(expit(spec.S * t_star + b))


def conditional_kl(P, Q, clamp: float = 1e-12) -> float:
    """Mean Bernoulli KL(P_i || Q_i) in nats, with 0 ln 0 = 0."""
    P = np.asarray(P, dtype=float)
    Q = np.clip(np.asarray(Q, dtype=float), clamp, 1 - clamp)
    if P.size == 0:
        raise ValueError("need at least one point")
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.where(P > 0, P * np.log(P / Q), 0.0)
        neg = np.where(P < 1, (1 - P) * np.log((1 - P) / (1 - Q)), 0.0)
    return float(np.mean(pos + neg))


def empirical_conditional_kl(spec: GaussianMixtureSpec, model, xs, feature_map: str | None = None) -> float:
    """KL from the true posterior to a fitted model, averaged over ``xs``.

    ``model`` is a FittedMethod (its own feature map is used) or a
    LinearModel together with ``feature_map``.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if isinstance(model, FittedMethod):
        Q = method_probabilities(model, xs)
    else:
        Q = predict_proba(model, featurize(feature_map or "r0", xs))
    return conditional_kl(true_posterior(spec, xs), Q)


# ---------------------------------------------------------------- experiments

TABLE1_SETTINGS: dict[str, dict] = {
    "default": {},
    "S=0.4": {"S": 0.4},
    "D=100": {"D": 100},
    "Ntr=100": {"n_train": 100},
    "pi1=0.05": {"pi1": 0.05},
    "O=50": {"O": 50.0},
}

SUITES = ("table1", "table2", "fig1", "domain-adapt")
METHODS = ("ml-e", "ml-delta", "f-delta", "truth-e", "truth-delta")
LEARNED = ("ml-e", "ml-delta", "f-delta")
CSV_HEADER = ("setting", "method", "feature_map", "seed", "trial", "f1", "theory_f1", "kl", "extra")


@dataclass
class ExperimentConfig:
    suite: str = "table1"
    setting: str = "default"
    D: int = 10
    S: float = 4.0
    O: float = 0.0
    pi1: float = 0.5
    n_train: int = 1000
    n_test: int = 3000
    seeds: tuple = (0,)
    trials: int = 1
    methods: tuple = METHODS
    feature_maps: tuple = ("r0", "r1", "r2")
    lam: float = 1.0
    beta: float = 1.0
    conv: EmptyConvention = ONE_ON_EMPTY
    retrain_per_trial: bool = False
    fig1_true_pi1: tuple = (0.1, 0.5, 0.9)
    fig1_grid: tuple = tuple(round(0.05 * i, 10) for i in range(1, 20))
    max_iter: int = 500
    tol: float = 1e-6
    jobs: int = 1

    @property
    def spec(self) -> GaussianMixtureSpec:
        return GaussianMixtureSpec(int(self.D), float(self.S), float(self.O), float(self.pi1))

    def validate(self) -> "ExperimentConfig":
        if self.suite not in SUITES:
            raise ValueError(f"suite: unknown suite {self.suite!r}; expected one of {SUITES}")
        for name in ("n_train", "n_test", "trials", "max_iter", "jobs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name}: must be a positive integer")
        if not self.seeds:
            raise ValueError("seeds: at least one seed is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"methods: unknown method {m!r}; expected a subset of {METHODS}")
        for fm in self.feature_maps:
            if fm not in FEATURE_MAPS[:3]:
                raise ValueError(f"feature_maps: unknown map {fm!r}; expected a subset of r0, r1, r2")
        if self.lam < 0:
            raise ValueError("lam: must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta: must be positive")
        for a in self.fig1_grid:
            if not 0 < a < 1:
                raise ValueError(f"fig1_grid: value {a} outside (0, 1)")
        for a in self.fig1_true_pi1:
            if not 0 < a < 1:
                raise ValueError(f"fig1_true_pi1: value {a} outside (0, 1)")
        try:
            self.spec
        except ValueError as exc:
            raise ValueError(f"spec: {exc}") from None
        return self


def default_config(suite: str, **overrides) -> ExperimentConfig:
    """Protocol defaults for a suite; ``overrides`` are ExperimentConfig fields.

    For table1 a ``setting`` override (one of TABLE1_SETTINGS) applies that
    row's parameter change on top of the Default row.
    """
    base: dict = {"suite": suite}
    if suite == "table1":
        setting = overrides.get("setting", "default")
        if setting not in TABLE1_SETTINGS:
            raise ValueError(f"setting: unknown table1 setting {setting!r}; expected one of {tuple(TABLE1_SETTINGS)}")
        base.update(TABLE1_SETTINGS[setting])
    elif suite == "table2":
        base.update(setting="pi1=0.05", pi1=0.05, n_test=100, trials=2000)
    elif suite == "fig1":
        base.update(setting="fig1", S=2.0, methods=("truth-e",), feature_maps=())
    elif suite == "domain-adapt":
        base.update(setting="domain-adapt", n_train=5000, n_test=5000,
                    methods=("truth-delta", "truth-e", "ml-delta", "ml-e"), feature_maps=("r1",))
    else:
        raise ValueError(f"suite: unknown suite {suite!r}; expected one of {SUITES}")
    names = {f.name for f in fields(ExperimentConfig)}
    for key in overrides:
        if key not in names:
            raise ValueError(f"{key}: not an experiment parameter")
    base.update(overrides)
    return ExperimentConfig(**base).validate()


@dataclass
class Row:
    setting: str
    method: str
    feature_map: str
    seed: int
    trial: object
    f1: float
    theory_f1: float | None = None
    kl: float | None = None
    extra: str = ""


def _f1(pred, ys, cfg: ExperimentConfig) -> float:
    return evaluate_binary(pred, ys, cfg.beta, cfg.conv).f


def _fit_learned(cfg: ExperimentConfig, train: LabeledSample) -> dict[tuple[str, str], FittedMethod]:
    opts = TrainOptions(max_iter=cfg.max_iter, tol=cfg.tol)
    fitted = {}
    for m in cfg.methods:
        if m not in LEARNED:
            continue
        for fm in cfg.feature_maps:
            fitted[m, fm] = fit_method(Method(m), train.xs, train.ys, cfg.beta, cfg.lam, opts,
                                       feature_map=fm, conv=cfg.conv)
    return fitted


def _score_all(cfg, spec, fitted, delta_star, test: LabeledSample, seed, trial, theory, setting):
    """One row per (method, map) on a single test set."""
    rows = []
    post = None
    for m in cfg.methods:
        if m in ("truth-e", "truth-delta"):
            if post is None:
                post = true_posterior(spec, test.xs)
            if m == "truth-e":
                res = optimal_prediction(post, cfg.beta, cfg.conv)
                pred, extra = res.mask, f"k={res.k_star}"
            else:
                pred, extra = (post > delta_star).astype(np.int64), f"delta={delta_star:.6f}"
            rows.append(Row(setting, m, "-", seed, trial, _f1(pred, test.ys, cfg), theory, 0.0, extra))
            continue
        for fm in cfg.feature_maps:
            fit = fitted[m, fm]
            pred = apply_method(fit, test.xs)
            kl = empirical_conditional_kl(spec, fit, test.xs)
            extra = "" if fit.threshold is None else f"delta={fit.threshold.delta:.6f}"
            rows.append(Row(setting, m, fm, seed, trial, _f1(pred, test.ys, cfg), theory, kl, extra))
    return rows


def _table1_seed(cfg: ExperimentConfig, seed: int) -> list[Row]:
    spec = cfg.spec
    t_star, theory = theoretical_optimal_f(spec, cfg.beta)
    delta_star = optimal_posterior_threshold(spec, cfg.beta)
    train = sample(spec, cfg.n_train, (seed, 0))
    test = sample(spec, cfg.n_test, (seed, 1))
    fitted = _fit_learned(cfg, train)
    return _score_all(cfg, spec, fitted, delta_star, test, seed, 0, theory, cfg.setting)


def _table2_seed(cfg: ExperimentConfig, seed: int) -> list[Row]:
    spec = cfg.spec
    _, theory = theoretical_optimal_f(spec, cfg.beta)
    delta_star = optimal_posterior_threshold(spec, cfg.beta)
    fitted = _fit_learned(cfg, sample(spec, cfg.n_train, (seed, 0)))
    rows: list[Row] = []
    for t in range(cfg.trials):
        if cfg.retrain_per_trial:
            fitted = _fit_learned(cfg, sample(spec, cfg.n_train, (seed, 3, t)))
        test = sample(spec, cfg.n_test, (seed, 2, t))
        rows.extend(_score_all(cfg, spec, fitted, delta_star, test, seed, t, theory, cfg.setting))
    summary = []
    keys = list(dict.fromkeys((r.method, r.feature_map) for r in rows))
    for key in keys:
        f = np.array([r.f1 for r in rows if (r.method, r.feature_map) == key])
        summary.append(Row(cfg.setting, key[0], key[1], seed, "mean", float(f.mean()), theory, None, "mean"))
        summary.append(Row(cfg.setting, key[0], key[1], seed, "std", float(f.std(ddof=1)) if f.size > 1 else 0.0,
                           theory, None, "std"))
    return rows + summary


def _fig1_seed(cfg: ExperimentConfig, seed: int) -> list[Row]:
    rows = []
    for true_pi1 in cfg.fig1_true_pi1:
        spec = replace(cfg.spec, pi1=float(true_pi1))
        _, theory = theoretical_optimal_f(spec, cfg.beta)
        test = sample(spec, cfg.n_test, (seed, 1))
        P = true_posterior(spec, test.xs)
        for a in cfg.fig1_grid:
            Q = true_posterior(replace(spec, pi1=float(a)), test.xs)
            pred = optimal_prediction(Q, cfg.beta, cfg.conv).mask
            rows.append(Row(f"fig1-pi1={true_pi1:g}", "assumed-e", "-", seed, 0,
                            _f1(pred, test.ys, cfg), theory, conditional_kl(P, Q),
                            f"assumed_pi1={float(a):.6f}"))
    return rows


def _domain_adapt_seed(cfg: ExperimentConfig, seed: int) -> list[Row]:
    spec = cfg.spec
    delta_star = optimal_posterior_threshold(spec, cfg.beta)
    fitted = _fit_learned(cfg, sample(spec, cfg.n_train, (seed, 0)))
    test = sample_filtered(spec, cfg.n_test, (seed, 1), max_posterior=0.5)
    return _score_all(cfg, spec, fitted, delta_star, test, seed, 0, None, cfg.setting)


_RUNNERS = {
    "table1": _table1_seed,
    "table2": _table2_seed,
    "fig1": _fig1_seed,
    "domain-adapt": _domain_adapt_seed,
}


def _run_one(args):
    cfg, seed = args
    return _RUNNERS[cfg.suite](cfg, seed)


def run_experiment(config: ExperimentConfig) -> list[Row]:
    """Run every seed of a suite; row order depends only on the config."""
    config.validate()
    jobs = [(config, int(s)) for s in config.seeds]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_seed = list(pool.map(_run_one, jobs))
    else:
        per_seed = [_run_one(j) for j in jobs]
    return [row for rows in per_seed for row in rows]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def write_csv(rows: Iterable[Row], out=None) -> str | None:
    """Write rows with the fixed header; returns the text when ``out`` is None."""
    buf = io.StringIO() if out is None else out
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_cell(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue() if out is None else None


def mean_f1(rows: Sequence[Row], method: str, feature_map: str = "-", setting: str | None = None) -> float:
    """Mean F1 over per-trial rows of one (method, map) cell."""
    vals = [r.f1 for r in rows
            if r.method == method and r.feature_map == feature_map and isinstance(r.trial, int)
            and (setting is None or r.setting == setting)]
    if not vals:
        raise KeyError(f"no rows for {method}/{feature_map}")
    return float(np.mean(vals))
