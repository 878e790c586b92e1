from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmeasure.dta import (
    expected_f_all_masks,
    expected_f_exact,
    expected_f_table_cubic,
    expected_f_table_quadratic,
    optimal_prediction,
    rational_betasq,
)
from fmeasure.metrics import ONE_ON_EMPTY, ZERO_ON_EMPTY


def sorted_desc(rng, n):
    return np.sort(rng.random(n))[::-1]


def test_exact_examples():
    assert expected_f_exact([0.9], [1]) == pytest.approx(0.9, abs=1e-15)
    assert expected_f_exact([0.9], [0], conv=ONE_ON_EMPTY) == pytest.approx(0.1, abs=1e-15)
    assert expected_f_exact([0.8, 0.6], [1, 1]) == pytest.approx(0.773333333333333, abs=1e-12)
    with pytest.raises(ValueError):
        expected_f_exact(np.full(30, 0.5), np.ones(30))


def test_cubic_examples():
    np.testing.assert_allclose(expected_f_table_cubic([0.8, 0.6]), [0.08, 0.64, 0.7733333333333333], atol=1e-12)
    np.testing.assert_allclose(expected_f_table_cubic([0.5]), [0.5, 0.5], atol=1e-15)
    with pytest.raises(ValueError):
        expected_f_table_cubic([0.6, 0.8])


def test_quadratic_examples():
    np.testing.assert_allclose(expected_f_table_quadratic([0.8, 0.6], (1, 1)),
                               [0.08, 0.64, 0.7733333333333333], atol=1e-12)
    assert expected_f_table_quadratic([0.5, 0.5], (1, 1))[2] == pytest.approx(0.5833333333333334, abs=1e-12)
    for bad in [(0, 1), (1, -2)]:
        with pytest.raises(ValueError):
            expected_f_table_quadratic([0.5], bad)
    with pytest.raises(ValueError):
        expected_f_table_quadratic([0.2, 0.7], (1, 1))


def test_optimal_prediction_examples():
    got = optimal_prediction([0.6, 0.8])
    assert got.k_star == 2 and got.mask.tolist() == [1, 1]
    assert got.expected_f == pytest.approx(0.7733333333333333, abs=1e-12)

    got = optimal_prediction([0.1, 0.2], conv=ONE_ON_EMPTY)
    assert got.k_star == 0 and got.mask.tolist() == [0, 0]
    assert got.expected_f == pytest.approx(0.72, abs=1e-12)
    np.testing.assert_allclose(got.table, [0.72, 0.19333333333333333, 0.19333333333333333], atol=1e-12)

    got = optimal_prediction([0.1, 0.2], conv=ZERO_ON_EMPTY)
    assert got.k_star == 1 and got.mask.tolist() == [0, 1]
    assert got.expected_f == pytest.approx(0.19333333333333333, abs=1e-12)


def test_batch_dependence_of_ml_e():
    # the same top instance is or is not predicted depending on the convention
    assert optimal_prediction([0.2, 0.1], conv=ONE_ON_EMPTY).mask[0] == 0
    assert optimal_prediction([0.2, 0.1], conv=ZERO_ON_EMPTY).mask[0] == 1


def test_rational_recognition():
    assert rational_betasq(1.0) == 1
    assert rational_betasq(0.5) == Fraction(1, 4)
    assert rational_betasq(Fraction(2, 3)) == Fraction(4, 9)
    assert rational_betasq(2.0 ** 0.5) == 2
    assert rational_betasq(np.pi) is None
    assert rational_betasq(np.pi, approximate=True) is not None


def test_irrational_beta_uses_cubic(rng):
    p = rng.random(9)
    got = optimal_prediction(p, beta=np.pi)
    ps = p[got.order]
    np.testing.assert_allclose(got.table, expected_f_table_cubic(ps, np.pi), atol=1e-14)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5])
def test_cubic_matches_exact(rng, beta):
    p = sorted_desc(rng, 10)
    table = expected_f_table_cubic(p, beta)
    for k in range(11):
        s = np.zeros(10, dtype=int)
        s[:k] = 1
        assert table[k] == pytest.approx(expected_f_exact(p, s, beta), abs=1e-10)


@pytest.mark.parametrize("betasq", [Fraction(1), Fraction(1, 2), Fraction(2), Fraction(4, 9), Fraction(9, 4)])
def test_quadratic_matches_cubic_n200(rng, betasq):
    p = sorted_desc(rng, 200)
    ref = expected_f_table_cubic(p, float(betasq) ** 0.5)
    got = expected_f_table_quadratic(p, betasq)
    assert np.max(np.abs(got - ref)) < 1e-8


@pytest.mark.parametrize("betasq", [Fraction(1), Fraction(1, 2), Fraction(2), Fraction(4, 9)])
def test_deflate_strategy_close_to_prefix(rng, betasq):
    # deflation trades memory for accuracy; it is held to a looser tolerance
    p = sorted_desc(rng, 200)
    ref = expected_f_table_quadratic(p, betasq)
    got = expected_f_table_quadratic(p, betasq, strategy="deflate")
    assert np.max(np.abs(got - ref)) < 1e-6


def test_deflate_strategy_exact_on_small(rng):
    p = sorted_desc(rng, 12)
    np.testing.assert_allclose(expected_f_table_quadratic(p, (1, 1), strategy="deflate"),
                               expected_f_table_quadratic(p, (1, 1)), atol=1e-10)


prob_lists = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=9)
convs = st.sampled_from([ONE_ON_EMPTY, ZERO_ON_EMPTY])
betasqs = st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(2), Fraction(4, 9)])


@given(prob_lists, betasqs, convs)
def test_quadratic_matches_enumeration(p, betasq, conv):
    p = np.sort(np.array(p))[::-1]
    got = expected_f_table_quadratic(p, betasq, conv)
    beta = float(betasq) ** 0.5
    for k in range(p.size + 1):
        s = np.zeros(p.size, dtype=int)
        s[:k] = 1
        assert got[k] == pytest.approx(expected_f_exact(p, s, beta, conv), abs=1e-10)


@given(prob_lists, convs)
def test_prefix_optimal_over_all_masks(p, conv):
    masks, values = expected_f_all_masks(p, 1.0, conv)
    best = optimal_prediction(p, 1.0, conv)
    assert best.expected_f == pytest.approx(values.max(), abs=1e-10)
    assert expected_f_exact(p, best.mask, 1.0, conv) == pytest.approx(values.max(), abs=1e-10)


@given(prob_lists, st.randoms(use_true_random=False))
def test_permutation_invariance(p, r):
    perm = list(range(len(p)))
    r.shuffle(perm)
    a = optimal_prediction(p)
    b = optimal_prediction([p[i] for i in perm])
    assert a.expected_f == pytest.approx(b.expected_f, abs=1e-12)


@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=1, max_size=30))
def test_degenerate_certainty(p):
    got = optimal_prediction(p)
    assert got.mask.tolist() == [int(v) for v in p]
    assert got.expected_f == pytest.approx(1.0, abs=1e-12)


def test_large_batch_runs():
    p = np.random.default_rng(0).random(3000)
    got = optimal_prediction(p)
    assert 0 < got.k_star < 3000
    assert got.table[got.k_star] == got.table.max()
