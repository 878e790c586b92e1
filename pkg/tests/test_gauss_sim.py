import csv
from dataclasses import replace
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from fmeasure.eum import threshold_sweep
from fmeasure.gauss_sim import (
    CSV_HEADER,
    GaussianMixtureSpec,
    LinearThreshold,
    conditional_kl,
    default_config,
    mean_f1,
    run_experiment,
    sample,
    sample_filtered,
    theoretical_optimal_f,
    true_posterior,
    write_csv,
)
from fmeasure.metrics import evaluate_binary, population_f


def test_spec_validation_names_field():
    with pytest.raises(ValueError, match="D"):
        GaussianMixtureSpec(D=0)
    with pytest.raises(ValueError, match="pi1"):
        GaussianMixtureSpec(pi1=1.0)
    with pytest.raises(ValueError, match="S"):
        GaussianMixtureSpec(S=-1)


def test_means():
    spec = GaussianMixtureSpec(D=4, S=4, O=2)
    np.testing.assert_allclose(spec.mu1, np.full(4, 6 / 4))
    np.testing.assert_allclose(spec.mu0, np.full(4, -2 / 4))
    assert spec.m1 == 3 and spec.m0 == -1


def test_sampling_deterministic():
    spec = GaussianMixtureSpec()
    a, b = sample(spec, 50, 7), sample(spec, 50, 7)
    np.testing.assert_array_equal(a.xs, b.xs)
    np.testing.assert_array_equal(a.ys, b.ys)
    assert not np.array_equal(sample(spec, 50, 8).xs, a.xs)


def test_class1_projection_mean():
    spec = GaussianMixtureSpec(D=10, S=4, O=1)
    s = sample(spec, 20000, 0)
    proj = s.xs[s.ys == 1] @ np.full(10, 1 / math.sqrt(10))
    se = proj.std(ddof=1) / math.sqrt(proj.size)
    assert abs(proj.mean() - (spec.S + spec.O) / 2) < 3 * se
    assert abs(s.ys.mean() - 0.5) < 3 * math.sqrt(0.25 / 20000)


def test_posterior_examples():
    assert true_posterior(GaussianMixtureSpec(D=3), np.zeros(3)) == pytest.approx(0.5, abs=1e-15)
    assert true_posterior(GaussianMixtureSpec(D=1, S=2), [1.0]) == pytest.approx(0.8807970779778823, abs=1e-12)


@given(st.integers(1, 6), st.floats(0.1, 5), st.floats(0, 5), st.floats(0.02, 0.98), st.integers(0, 1000))
def test_posterior_density_ratio(D, S, O, pi1, seed):
    spec = GaussianMixtureSpec(D, S, O, pi1)
    x = np.random.default_rng(seed).normal(size=D) + spec.mu0
    a = pi1 * multivariate_normal.pdf(x, spec.mu1)
    b = (1 - pi1) * multivariate_normal.pdf(x, spec.mu0)
    assert true_posterior(spec, x) == pytest.approx(a / (a + b), abs=1e-10)


@pytest.mark.parametrize("S,pi1,want", [(4, 0.5, 0.9772), (0.4, 0.5, 0.6688), (4, 0.05, 0.9173)])
def test_theory_values(S, pi1, want):
    _, f = theoretical_optimal_f(GaussianMixtureSpec(S=S, pi1=pi1))
    assert f == pytest.approx(want, abs=5e-4)


def test_theory_invariant_to_D_and_O():
    _, base = theoretical_optimal_f(GaussianMixtureSpec(D=10, S=3, O=0, pi1=0.3))
    for D, O in [(1, 0), (100, 0), (10, 7), (3, 50)]:
        _, f = theoretical_optimal_f(GaussianMixtureSpec(D=D, S=3, O=O, pi1=0.3))
        assert f == pytest.approx(base, abs=1e-9)


def test_theory_rejects_zero_separation():
    with pytest.raises(ValueError):
        theoretical_optimal_f(GaussianMixtureSpec(S=0.0))


def test_population_rates_match_simulation():
    spec = GaussianMixtureSpec()
    theta = LinearThreshold.midpoint(spec)
    xs, ys = spec.draw(200000, 1)
    emp = evaluate_binary(theta(xs), ys).f
    assert population_f(spec.population_rates(theta)) == pytest.approx(emp, abs=3e-3)


def test_kl_examples():
    assert conditional_kl([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert conditional_kl([0.5], [0.25]) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-12)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0.001, 0.999)), min_size=1, max_size=20))
def test_kl_nonnegative(pairs):
    P, Q = zip(*pairs)
    assert conditional_kl(P, Q) >= -1e-15


def test_posterior_rank_preserving_sweep():
    spec = GaussianMixtureSpec(pi1=0.3)
    s = sample(spec, 500, 2)
    post = true_posterior(spec, s.xs)
    a = threshold_sweep(post, s.ys)
    b = threshold_sweep(s.xs.sum(axis=1), s.ys)
    assert a.train_f == b.train_f
    assert a.apply(post).tolist() == b.apply(s.xs.sum(axis=1)).tolist()


def test_filtered_sample():
    spec = GaussianMixtureSpec()
    s = sample_filtered(spec, 300, 3)
    assert s.xs.shape == (300, 10)
    assert (true_posterior(spec, s.xs) < 0.5).all()


def test_config_validation():
    with pytest.raises(ValueError, match="n_test"):
        default_config("table1", n_test=0)
    with pytest.raises(ValueError, match="methods"):
        default_config("table1", methods=("svm",))
    with pytest.raises(ValueError, match="bogus"):
        default_config("table1", bogus=1)
    with pytest.raises(ValueError, match="suite"):
        default_config("table9")


def test_table1_rows_and_csv():
    cfg = default_config("table1", n_train=200, n_test=300, seeds=(0, 1), feature_maps=("r1",))
    rows = run_experiment(cfg)
    assert len(rows) == 2 * 5
    text = write_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_HEADER
    assert all(float(r[6]) == pytest.approx(0.9772, abs=5e-4) for r in parsed[1:])
    assert 0.9 < mean_f1(rows, "truth-e") <= 1.0
    assert write_csv(run_experiment(cfg)) == text


def test_parallel_matches_serial():
    cfg = default_config("table1", n_train=100, n_test=200, seeds=(3, 4), feature_maps=("r0",))
    assert write_csv(run_experiment(replace(cfg, jobs=2))) == write_csv(run_experiment(cfg))


def test_table2_summary_rows():
    cfg = default_config("table2", trials=5, n_train=200, feature_maps=("r1",), methods=("truth-e", "ml-delta"))
    rows = run_experiment(cfg)
    assert len(rows) == 5 * 2 + 2 * 2
    means = [r for r in rows if r.trial == "mean"]
    assert means[0].f1 == pytest.approx(mean_f1(rows, "truth-e"))


def test_fig1_kl_minimized_at_truth():
    cfg = default_config("fig1", n_test=1000, fig1_true_pi1=(0.3,))
    rows = run_experiment(cfg)
    best = min(rows, key=lambda r: r.kl)
    assert best.extra == "assumed_pi1=0.300000"
    assert best.kl == pytest.approx(0.0, abs=1e-15)
