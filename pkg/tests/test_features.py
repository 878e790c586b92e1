import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmeasure.features import feature_dim, featurize


def test_r2_layout():
    a, b = 2.0, -3.0
    np.testing.assert_array_equal(featurize("r2", [a, b]), [a, b, 1, a * a, a * b, b * b])


def test_r1_of_zero():
    np.testing.assert_array_equal(featurize("r1", np.zeros(4)), [0, 0, 0, 0, 1])


def test_r0_is_identity():
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(featurize("r0", x), x)


def test_unknown_map():
    with pytest.raises(ValueError):
        featurize("r3", [1.0])


@given(st.integers(1, 12), st.sampled_from(["r0", "r1", "r2", "identity"]))
def test_dimensions(d, kind):
    x = np.random.default_rng(d).normal(size=(3, d))
    assert featurize(kind, x).shape == (3, feature_dim(kind, d))
    np.testing.assert_array_equal(featurize(kind, x)[1], featurize(kind, x[1]))
