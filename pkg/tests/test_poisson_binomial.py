import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmeasure.poisson_binomial import (
    DeflationUnstable,
    convolve_factor,
    iter_prefix_rows_reversed,
    pb_coefficients,
    pb_deflate,
    pb_prefix_table,
)


def enumerate_pmf(p):
    """P(sum = i) by summing over all 2^n outcomes."""
    n = len(p)
    out = np.zeros(n + 1)
    for bits in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for b, pi in zip(bits, p):
            prob *= pi if b else 1 - pi
        out[sum(bits)] += prob
    return out


def test_examples():
    np.testing.assert_array_equal(pb_coefficients([]), [1.0])
    np.testing.assert_allclose(pb_coefficients([0.5, 0.5]), [0.25, 0.5, 0.25])
    np.testing.assert_allclose(pb_coefficients([0.2, 0.7]), [0.24, 0.62, 0.14], atol=1e-15)


def test_prefix_table_examples():
    rows = pb_prefix_table([0.2, 0.7])
    assert len(rows) == 3
    for got, want in zip(rows, [[1], [0.8, 0.2], [0.24, 0.62, 0.14]]):
        np.testing.assert_allclose(got, want, atol=1e-15)
    rows = pb_prefix_table([1.0])
    np.testing.assert_array_equal(rows[1], [0.0, 1.0])


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        pb_coefficients([0.5, 1.5])
    with pytest.raises(ValueError):
        pb_prefix_table([-0.1])


def test_deflate_examples():
    np.testing.assert_allclose(pb_deflate([0.24, 0.62, 0.14], 0.7), [0.8, 0.2], atol=1e-15)
    np.testing.assert_allclose(pb_deflate([0.5, 0.5], 0.5), [1.0])
    np.testing.assert_array_equal(pb_deflate([0.0, 1.0], 1.0), [1.0])
    np.testing.assert_array_equal(pb_deflate([1.0, 0.0], 0.0), [1.0])


def test_deflate_flags_instability():
    # 0.1 + 0.8x + 0.1x^2 has no factor 0.7 + 0.3x
    with pytest.raises(DeflationUnstable):
        pb_deflate([0.1, 0.8, 0.1], 0.3)


probs = st.lists(st.floats(0.0, 1.0), min_size=0, max_size=12)


@given(probs)
def test_matches_enumeration(p):
    np.testing.assert_allclose(pb_coefficients(p), enumerate_pmf(p), atol=1e-12, rtol=0)


@given(st.lists(st.floats(0.0, 1.0), min_size=0, max_size=60))
def test_sum_and_mean(p):
    c = pb_coefficients(p)
    assert c.sum() == pytest.approx(1.0, abs=1e-9)
    assert (c >= 0).all() and (c <= 1).all()
    assert np.dot(np.arange(c.size), c) == pytest.approx(sum(p), abs=1e-9)


@given(st.lists(st.floats(0.0, 1.0), min_size=0, max_size=40), st.integers(1, 8))
def test_prefix_routes_bit_identical(p, block):
    table = pb_prefix_table(p)
    np.testing.assert_array_equal(table[-1], pb_coefficients(p))
    seen = list(iter_prefix_rows_reversed(p, block=block))
    assert [k for k, _ in seen] == list(range(len(p), -1, -1))
    for k, row in seen:
        assert row.size == k + 1
        np.testing.assert_array_equal(row, table[k])


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30), st.floats(0.0, 0.95))
def test_deflate_round_trip(p, pk):
    c = pb_coefficients(p)
    np.testing.assert_allclose(pb_deflate(convolve_factor(c, pk), pk), c, atol=1e-9, rtol=0)
