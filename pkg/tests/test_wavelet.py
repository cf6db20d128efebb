import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavelet_dp.errors import InvalidSize, OrthonormalityFailure, ShapeMismatch
from wavelet_dp.wavelet import (ALPHA, BETA1, BETA2, FilterBank, TransformedData, build_operator,
                                default_filter_bank, dense_matrix, forward, get_operator, inverse,
                                write_dense)

SQRT3 = np.sqrt(3.0)
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_filter_bank_identities():
    for name, residual in default_filter_bank().identities().items():
        assert abs(residual) < 1e-9, name


def test_filter_bank_shape():
    fb = default_filter_bank()
    assert fb.length == 6 and fb.bands == 3 and fb.regularity == 2
    assert np.array_equal(fb.alpha, ALPHA)
    with pytest.raises(ValueError):
        fb.alpha[0] = 1.0


def test_mismatched_filter_lengths_rejected():
    with pytest.raises(ValueError):
        FilterBank(ALPHA, BETA1[:5], BETA2)


@pytest.mark.parametrize("N", [7, 3, 0, 10])
def test_invalid_sizes(N):
    with pytest.raises(InvalidSize):
        build_operator(default_filter_bank(), N)


def test_bad_bank_fails_self_check():
    bad = FilterBank(np.array(ALPHA) * 1.01, BETA1, BETA2)
    with pytest.raises(OrthonormalityFailure):
        build_operator(bad, 9)


def test_ones_vector_n9():
    T = forward(build_operator(default_filter_bank(), 9), np.ones(9))
    np.testing.assert_allclose(T.approx, [SQRT3] * 3, atol=1e-12)
    np.testing.assert_allclose(T.detail1, 0.0, atol=1e-12)
    np.testing.assert_allclose(T.detail2, 0.0, atol=1e-12)


def test_constant_column_scales():
    T = forward(get_operator(9), 4.5 * np.ones((9, 2)))
    np.testing.assert_allclose(T.approx, SQRT3 * 4.5, atol=1e-12)
    np.testing.assert_allclose(np.vstack([T.detail1, T.detail2]), 0.0, atol=1e-12)


def test_zero_matrix():
    T = forward(get_operator(9), np.zeros((9, 3)))
    assert all(not b.any() for b in T.blocks)


def test_inverse_of_constant_case():
    z = np.zeros(3)
    x = inverse(get_operator(9), TransformedData(np.full(3, SQRT3), z, z))
    np.testing.assert_allclose(x, 1.0, atol=1e-12)


@pytest.mark.parametrize("N", [9, 27, 81, 6, 12])
def test_dense_oracle_orthogonal(N):
    W = dense_matrix(get_operator(N))
    assert np.abs(W.T @ W - np.eye(N)).max() < 1e-10
    assert np.abs(W @ W.T - np.eye(N)).max() < 1e-10


def test_forward_matches_dense_9x4():
    rng = np.random.default_rng(0)
    D = rng.normal(size=(9, 4))
    op = get_operator(9)
    assert np.abs(forward(op, D).stacked() - dense_matrix(op) @ D).max() < 1e-12 * np.abs(D).max()


def test_roundtrip_27x3():
    D = np.random.default_rng(1).normal(size=(27, 3))
    op = get_operator(27)
    assert np.abs(inverse(op, forward(op, D)) - D).max() < 1e-9


def test_inverse_then_forward_against_dense():
    rng = np.random.default_rng(2)
    op = get_operator(27)
    T = TransformedData(*(rng.normal(size=(9, 2)) for _ in range(3)))
    X = inverse(op, T)
    np.testing.assert_allclose(X, dense_matrix(op).T @ T.stacked(), atol=1e-12)
    assert np.abs(forward(op, X).stacked() - T.stacked()).max() < 1e-9


def test_shape_errors():
    op = get_operator(9)
    with pytest.raises(ShapeMismatch):
        forward(op, np.ones((12, 2)))
    with pytest.raises(ShapeMismatch):
        inverse(op, TransformedData(*(np.ones((4, 2)),) * 3))
    with pytest.raises(ShapeMismatch):
        TransformedData(np.ones((3, 2)), np.ones((3, 2)), np.ones((2, 2)))
    with pytest.raises(InvalidSize):
        dense_matrix(get_operator(243))


def test_complex_inverse():
    rng = np.random.default_rng(3)
    op = get_operator(9)
    T = forward(op, rng.normal(size=(9, 2)) + 1j * rng.normal(size=(9, 2)))
    X = inverse(op, T)
    assert np.iscomplexobj(X)
    np.testing.assert_allclose(forward(op, X).stacked(), T.stacked(), atol=1e-12)


def test_stacked_roundtrip():
    Y = np.arange(18.0).reshape(9, 2)
    np.testing.assert_array_equal(TransformedData.from_stacked(Y).stacked(), Y)


def test_write_dense(tmp_path):
    op = get_operator(9)
    path = tmp_path / "w9.txt"
    write_dense(op, path)
    np.testing.assert_array_equal(np.loadtxt(path), dense_matrix(op))


def test_large_roundtrip():
    op = get_operator(19683)
    D = np.random.default_rng(4).normal(size=(19683, 2))
    assert np.abs(inverse(op, forward(op, D)) - D).max() / np.abs(D).max() < 1e-9


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 20), x=st.data())
def test_norm_preservation(k, x):
    N = 3 * k
    v = x.draw(arrays(np.float64, N, elements=finite))
    Tv = forward(get_operator(N), v).stacked()
    assert abs(np.linalg.norm(Tv) - np.linalg.norm(v)) <= 1e-9 * max(np.linalg.norm(v), 1.0)
    assert np.abs(inverse(get_operator(N), forward(get_operator(N), v)) - v).max() <= 1e-9 * max(np.abs(v).max(), 1.0)


@settings(max_examples=40, deadline=None)
@given(a=finite, b=finite, seed=st.integers(0, 2**32 - 1))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    D1, D2 = rng.normal(size=(27, 3)), rng.normal(size=(27, 3))
    op = get_operator(27)
    lhs = forward(op, a * D1 + b * D2).stacked()
    rhs = a * forward(op, D1).stacked() + b * forward(op, D2).stacked()
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(abs(a) + abs(b), 1.0)
