from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bayesmachine.errors import ConfigurationError, ProbabilityRangeError
from bayesmachine.memory import FaultModel, read_byte
from bayesmachine.oracle import (
    PROB_FLOOR,
    LikelihoodTable,
    compile_table,
    dequantize,
    exact_posterior,
    normalize_columns,
    quantize,
    without_uniform_prior,
)

positive = st.floats(0.01, 1.0)
tables = arrays(float, (3, 2, 4), elements=positive)


def test_single_column_posterior_follows_likelihoods():
    t = LikelihoodTable(np.array([[[0.1]], [[0.3]], [[0.6]]]))
    np.testing.assert_allclose(exact_posterior(t, (0,)).probs, [0.1, 0.3, 0.6])


def test_two_row_hand_example():
    t = LikelihoodTable(np.array([[[0.5], [0.5]], [[1.0], [1.0]]]))
    np.testing.assert_allclose(exact_posterior(t, (0, 0)).probs, [0.2, 0.8])


def test_degenerate_posterior_is_uniform_and_flagged():
    t = LikelihoodTable(np.array([[[0.0, 1.0]], [[0.0, 0.5]]]))
    post = exact_posterior(t, (0,))
    assert post.degenerate
    np.testing.assert_allclose(post.probs, [0.5, 0.5])
    assert not exact_posterior(t, (1,)).degenerate


def test_prior_multiplies_in():
    t = LikelihoodTable(np.ones((2, 1, 1)), prior=[1.0, 3.0])
    np.testing.assert_allclose(exact_posterior(t, (0,)).probs, [0.25, 0.75])


def test_normalize_example_and_idempotence():
    t = LikelihoodTable(np.array([0.2, 0.4, 0.1, 0.4]).reshape(1, 1, 4))
    n = normalize_columns(t)
    np.testing.assert_allclose(n.values.ravel(), [0.5, 1.0, 0.25, 1.0])
    np.testing.assert_allclose(normalize_columns(n).values, n.values)


def test_all_zero_column_rejected():
    with pytest.raises(ConfigurationError):
        LikelihoodTable(np.zeros((2, 1, 3)))


@given(tables)
def test_posterior_sums_to_one(values):
    t = LikelihoodTable(values)
    for o in np.ndindex(4, 4):
        assert abs(exact_posterior(t, o).probs.sum() - 1) < 1e-12


@given(tables)
def test_normalization_preserves_row_ordering(values):
    t = LikelihoodTable(values)
    n = normalize_columns(t)
    np.testing.assert_allclose(normalize_columns(n).values, n.values)
    for o in np.ndindex(4, 4):
        a, b = t.unnormalized(o), n.unnormalized(o)
        np.testing.assert_array_equal(np.argsort(a, kind="stable"), np.argsort(b, kind="stable"))


@pytest.mark.parametrize("p,v", [(1.0, 255), (1 / 256, 0), (0.5, 127)])
def test_quantize_examples(p, v):
    assert quantize(p) == v


@pytest.mark.parametrize("p", [0.0, -0.1, 1.0001, float("nan")])
def test_quantize_range(p):
    with pytest.raises(ProbabilityRangeError):
        quantize(p)


@given(st.floats(PROB_FLOOR, 1.0))
def test_quantization_error_bound(p):
    assert abs(dequantize(quantize(p)) - p) <= 1 / 512 + 1e-15


@given(st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
def test_quantize_monotone(a, b):
    lo, hi = sorted((a, b))
    assert quantize(lo) <= quantize(hi)
    assert 0 <= quantize(lo) <= 255


def test_quantize_is_onto():
    p = (np.arange(256) + 1) / 256
    assert sorted(set(quantize(p).tolist())) == list(range(256))


@given(tables)
def test_compile_round_trip(values):
    t = LikelihoodTable(values)
    image = compile_table(t)
    expected = quantize(np.maximum(normalize_columns(t).values, PROB_FLOOR))
    fm = FaultModel.noiseless()
    got = np.array([[[read_byte(a, e, fm) for e in range(4)] for a in row] for row in image.arrays])
    np.testing.assert_array_equal(got, expected)
    assert np.all(got.max(axis=(0, 2)) == 255)


def test_compile_floors_zero_likelihoods():
    t = LikelihoodTable(np.array([[[0.0, 1.0]], [[1.0, 0.0]]]))
    assert compile_table(t).byte_tensor().min() == 0


def test_uniform_prior_dropped():
    t = LikelihoodTable(np.ones((2, 1, 1)), prior=[0.3, 0.3])
    assert without_uniform_prior(t).prior is None
    t2 = LikelihoodTable(np.ones((2, 1, 1)), prior=[0.3, 0.6])
    assert without_uniform_prior(t2).prior is not None
    assert compile_table(t2).config.has_prior_column
