import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavelet_dp.errors import (ArgumentOutOfDomain, DegenerateRange, DeltaOutOfRange, InvalidParameter,
                               ShapeMismatch, ZeroDelta)
from wavelet_dp.mechanisms import (DELTA_MAX_REAL, AngleBundle, Mechanism, PrivacyParams, angles_from_values,
                                   block_seed, bound_transform, cosine_branch, laplace_sigmoid,
                                   laplace_sigmoid_noise, ls_plus_privatize, ls_privatize, modulus_view,
                                   pq_embed, pq_embed_image, pq_extract, pq_privatize, privatize,
                                   privatize_block, sample_laplace, values_from_angles)
from wavelet_dp.wavelet import forward, get_operator

PI = np.pi


def details(D):
    T = forward(get_operator(D.shape[0]), D)
    return np.vstack([T.detail1, T.detail2])


@pytest.fixture
def D27():
    return np.random.default_rng(7).normal(size=(27, 5))


# ---- parameters ----

@pytest.mark.parametrize("kw", [dict(epsilon=0), dict(epsilon=-1), dict(gamma=0), dict(eta=1.5),
                                dict(eta=-0.1)])
def test_params_rejected(kw):
    with pytest.raises(InvalidParameter):
        PrivacyParams(**kw)


def test_negative_delta_rejected():
    with pytest.raises(DeltaOutOfRange):
        PrivacyParams(delta=-0.01)


def test_eps_prime():
    p = PrivacyParams(epsilon=2.0, gamma=1.0)
    assert p.eps_prime == pytest.approx(2.0 / (1 + np.exp(-1.0)))


# ---- bound transform ----

def test_bound_transform_examples():
    A = np.array([[0.0, 5.0, 10.0]])
    np.testing.assert_allclose(bound_transform(A, 1.0), [[-1.0, 0.0, 1.0]])
    np.testing.assert_allclose(bound_transform(A, 2.0), [[-2.0, 0.0, 2.0]])
    with pytest.raises(DegenerateRange):
        bound_transform(np.full((2, 2), 3.0), 1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(0.1, 10.0))
def test_bound_transform_range_and_order(seed, gamma):
    A = np.random.default_rng(seed).normal(size=(4, 3))
    B = bound_transform(A, gamma)
    assert B.min() == pytest.approx(-gamma) and B.max() == pytest.approx(gamma)
    order = np.argsort(A, axis=None)
    assert np.all(np.diff(B.ravel()[order]) >= -1e-12)


# ---- Laplace sampling ----

def test_laplace_moments():
    X = sample_laplace(1.0, np.random.default_rng(11), 10**6)
    assert abs(X.mean()) < 4 * np.sqrt(2) / 1e3
    assert abs(X.var() - 2.0) / 2.0 < 0.05


def test_laplace_scale_family():
    a = sample_laplace(1.0, np.random.default_rng(3), 1000)
    b = sample_laplace(2.0, np.random.default_rng(3), 1000)
    np.testing.assert_array_equal(b, 2.0 * a)


def test_laplace_rejects_bad_scale():
    with pytest.raises(InvalidParameter):
        sample_laplace(0.0, np.random.default_rng(0))


def test_laplace_draws_finite_at_extremes():
    class Edge:
        def random(self, size):
            return np.array([0.0, 1.0 - 2**-53, 0.5])
    X = sample_laplace(1.0, Edge(), 3)
    assert np.isfinite(X).all()


# ---- Laplace-Sigmoid ----

def test_laplace_sigmoid_examples():
    np.testing.assert_allclose(laplace_sigmoid(np.array([2.0, -2.0]), np.zeros(2)), [1.0, -1.0])


def test_laplace_sigmoid_ratio_range_gamma1():
    rng = np.random.default_rng(5)
    A_star = rng.uniform(-1, 1, 10**5)
    X = sample_laplace(1.0, rng, 10**5)
    ratio = np.abs(laplace_sigmoid(X, A_star)) / np.abs(X)
    assert ratio.min() >= 1 / (1 + np.e) - 1e-15
    assert ratio.max() <= 1 / (1 + np.exp(-1)) + 1e-15


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_noise_bound(gamma):
    rng = np.random.default_rng(int(gamma * 10))
    A_star = bound_transform(rng.normal(size=(10**5,)), gamma)
    N, trace = laplace_sigmoid_noise(A_star, 1.0, np.random.default_rng(1))
    X = sample_laplace(1.0, np.random.default_rng(1), A_star.shape)
    # the bound is exact in real arithmetic; allow only rounding
    assert np.all((1 + np.exp(-gamma)) * np.abs(N) <= np.abs(X) * (1 + 1e-12))
    np.testing.assert_array_equal(trace, np.where(X >= 0, 1, -1))
    assert np.all(np.sign(N) == np.sign(X))


def test_laplace_sigmoid_mean_zero():
    # mean zero holds for A* symmetric about 0; a fixed A* != 0 skews the noise
    rng = np.random.default_rng(9)
    gamma = 1.0
    A_star = rng.uniform(-gamma, gamma, 10**6)
    N, _ = laplace_sigmoid_noise(A_star, 1.0, rng)
    assert abs(N.mean()) < 4 * N.std() / np.sqrt(N.size)


# ---- LS ----

def test_ls_vanishing_noise():
    D = np.random.default_rng(0).normal(size=(27, 4))
    errs = [np.abs(ls_privatize(D, PrivacyParams(epsilon=1e6, seed=s)).data - D).max() for s in range(200)]
    assert np.percentile(errs, 99.9) < 1e-3 * np.abs(D).max()


def test_ls_subband_isolation():
    D = np.random.default_rng(1).normal(size=(9, 3))
    out = ls_privatize(D, PrivacyParams(epsilon=0.5, seed=2)).data
    assert np.abs(details(out) - details(D)).max() < 1e-9
    assert np.abs(out - D).max() > 1e-3


def test_ls_deterministic(D27):
    p = PrivacyParams(epsilon=1.0, seed=42)
    a, b = ls_privatize(D27, p, retain_trace=True), ls_privatize(D27, p, retain_trace=True)
    np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(a.trace, b.trace)
    assert ls_privatize(D27, p).trace is None


def test_ls_errors():
    with pytest.raises(ShapeMismatch):
        ls_privatize(np.ones((10, 2)), PrivacyParams())
    with pytest.raises(ShapeMismatch):
        ls_privatize(np.ones((3, 2)), PrivacyParams())
    with pytest.raises(DegenerateRange):
        ls_privatize(np.ones((9, 2)), PrivacyParams())


def test_label_column_binarized(D27):
    D = D27.copy()
    D[:, 4] = (D[:, 4] > 0).astype(float)
    for mech in Mechanism:
        out = privatize(D, mech, PrivacyParams(epsilon=1.0, label_col=4, seed=1)).data
        assert set(np.unique(out[:, 4])) <= {0.0, 1.0}


def test_label_threshold_negative_half(D27):
    hi = pq_privatize(D27, PrivacyParams(label_col=0, label_threshold=-0.5, seed=3)).data[:, 0]
    lo = pq_privatize(D27, PrivacyParams(label_col=0, label_threshold=0.5, seed=3)).data[:, 0]
    assert hi.sum() >= lo.sum()


# ---- LS+ ----

def test_ls_plus_single_block_reduces_to_ls():
    D = np.random.default_rng(3).normal(size=(9, 9))
    p = PrivacyParams(epsilon=1.0, seed=17)
    plus = ls_plus_privatize(D, p, block_rows=9, retain_trace=True)
    ref = ls_privatize(D, p, rng=np.random.default_rng(block_seed(17, 0)), retain_trace=True)
    np.testing.assert_array_equal(plus.data, ref.data)
    np.testing.assert_array_equal(plus.trace, ref.trace)


def test_ls_plus_disjoint_blocks():
    rng = np.random.default_rng(4)
    D = rng.normal(size=(18, 9))
    D2 = D.copy()
    D2[9:] = rng.normal(size=(9, 9))
    p = PrivacyParams(seed=5)
    a, b = ls_plus_privatize(D, p).data, ls_plus_privatize(D2, p).data
    np.testing.assert_array_equal(a[:9], b[:9])
    assert not np.array_equal(a[9:], b[9:])


@pytest.mark.parametrize("workers", [1, 4])
def test_ls_plus_schedules_identical(workers):
    D = np.random.default_rng(6).normal(size=(90, 7))
    D[:, 6] = (D[:, 6] > 0)
    p = PrivacyParams(epsilon=2.0, seed=8, label_col=6)
    seq = ls_plus_privatize(D, p, retain_trace=True)
    par = ls_plus_privatize(D, p, retain_trace=True, workers=workers)
    np.testing.assert_array_equal(seq.data, par.data)
    np.testing.assert_array_equal(seq.trace, par.trace)
    # reversed block order, reassembled
    parts = {i: privatize_block(D[9 * i:9 * i + 9], p, i)[0] for i in reversed(range(10))}
    manual = np.vstack([parts[i] for i in range(10)])
    manual[:, 6] = manual[:, 6] >= 0.5
    np.testing.assert_array_equal(manual, seq.data)


def test_ls_plus_isolation_per_block():
    D = np.random.default_rng(10).normal(size=(27, 5))
    out = ls_plus_privatize(D, PrivacyParams(seed=1), block_rows=9).data
    for i in range(3):
        assert np.abs(details(out[9 * i:9 * i + 9]) - details(D[9 * i:9 * i + 9])).max() < 1e-9


def test_ls_plus_errors():
    with pytest.raises(ShapeMismatch):
        ls_plus_privatize(np.ones((20, 3)), PrivacyParams(), block_rows=9)
    with pytest.raises(ShapeMismatch):
        ls_plus_privatize(np.ones((20, 3)), PrivacyParams(), block_rows=5)
    D = np.random.default_rng(0).normal(size=(18, 3))
    D[9:] = 1.0
    with pytest.raises(DegenerateRange):
        ls_plus_privatize(D, PrivacyParams())


# ---- angles ----

def test_angle_map_examples():
    X = np.array([[1.0, 3.0], [2.0, 5.0]])
    b = angles_from_values(X)
    assert b.theta[1, 1] == pytest.approx(PI / 3) and b.theta[0, 0] == pytest.approx(PI / 6)
    assert angles_from_values(np.array([0.0, 1.0, 2.0])).theta[1] == pytest.approx(PI / 4)
    assert values_from_angles(PI / 3, 5.0, 1.0) == pytest.approx(5.0)
    assert values_from_angles(PI / 6, 5.0, 1.0) == pytest.approx(1.0)
    assert values_from_angles(PI / 4, 5.0, 1.0) == pytest.approx(3.0)
    with pytest.raises(DegenerateRange):
        angles_from_values(np.zeros(4))
    with pytest.raises(DegenerateRange):
        values_from_angles(PI / 4, 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_angle_roundtrip(seed, scale):
    X = scale * np.random.default_rng(seed).normal(size=(5, 4))
    b = angles_from_values(X)
    assert b.theta.min() >= PI / 6 - 1e-15 and b.theta.max() <= PI / 3 + 1e-15
    assert np.abs(values_from_angles(b.theta, b.mu1, b.v1) - X).max() <= 1e-12 * max(scale, 1.0) * 10


# ---- PQ embedding ----

def _angles(rng, shape):
    return rng.uniform(PI / 6, PI / 3, shape), rng.uniform(PI / 6, PI / 3, shape)


def test_embed_delta_zero_identity():
    rng = np.random.default_rng(0)
    theta, x = _angles(rng, (4, 5))
    thetaE, _ = pq_embed(theta, x, 0.0, 0.0, rng)
    assert np.abs(thetaE - theta).max() < 1e-12


def test_embed_eta_one_all_sine():
    rng = np.random.default_rng(1)
    theta, x = _angles(rng, (30, 30))
    thetaE, k = pq_embed(theta, x, 0.1, 1.0, rng)
    assert not cosine_branch(k, 1.0).any()
    np.testing.assert_allclose(thetaE, np.arcsin(np.sin(theta) + 0.1 * np.sin(x)))


def test_embed_extract_roundtrip():
    rng = np.random.default_rng(2)
    theta, x = _angles(rng, (9, 6))
    thetaE, k = pq_embed(AngleBundle(theta, 1.0, 0.0), x, 0.1, 0.3, rng)
    assert np.abs(pq_extract(thetaE, theta, k, 0.1, 0.3) - x).max() < 1e-9


@pytest.mark.parametrize("eta", [0.0, 0.5, 1.0])
def test_branch_frequency(eta):
    rng = np.random.default_rng(int(eta * 100))
    theta, x = _angles(rng, (10**5,))
    _, k = pq_embed(theta, x, 0.1, eta, rng)
    assert abs(cosine_branch(k, eta).mean() - (1 - eta) / 2) < 0.01


def test_delta_bound_real_vs_image():
    rng = np.random.default_rng(3)
    theta, x = _angles(rng, (3, 3))
    with pytest.raises(DeltaOutOfRange):
        pq_embed(theta, x, 0.16, 0.0, rng)
    with pytest.raises(DeltaOutOfRange):
        pq_privatize(rng.normal(size=(9, 3)), PrivacyParams(delta=0.16))
    Z = pq_embed_image(rng.random((9, 3)), PrivacyParams(delta=0.16, seed=1))
    assert np.iscomplexobj(Z)


def test_embed_shape_mismatch():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeMismatch):
        pq_embed(np.ones((2, 2)), np.ones((2, 3)), 0.1, 0.0, rng)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0.0, 1.0), eta=st.floats(0.0, 1.0))
def test_real_mode_stays_in_domain(seed, frac, eta):
    # at any delta up to the bound, arguments never leave [-1, 1]
    rng = np.random.default_rng(seed)
    theta, x = _angles(rng, (6, 4))
    theta[0, 0], x[0, 0] = PI / 3, PI / 3
    thetaE, _ = pq_embed(theta, x, frac * DELTA_MAX_REAL, eta, rng)
    assert np.isfinite(thetaE).all() and np.isrealobj(thetaE)


def test_extract_zero_delta():
    with pytest.raises(ZeroDelta):
        pq_extract(np.ones(2), np.ones(2), np.zeros(2), 0.0, 0.0)


def test_flipped_selector_detected():
    rng = np.random.default_rng(4)
    theta, x = _angles(rng, (3, 4))
    thetaE, k = pq_embed(theta, x, 0.1, 0.0, rng)
    flipped = k.copy()
    flipped[1, 2] = 0.75 if k[1, 2] < 0.5 else 0.25
    try:
        rec = pq_extract(thetaE, theta, flipped, 0.1, 0.0)
    except ArgumentOutOfDomain:
        return
    assert abs(rec[1, 2] - x[1, 2]) > 1e-6
    mask = np.ones_like(x, bool)
    mask[1, 2] = False
    assert np.abs(rec[mask] - x[mask]).max() < 1e-9


# ---- PQ pipeline ----

def test_pq_delta_zero_identity(D27):
    out = pq_privatize(D27, PrivacyParams(delta=0.0, seed=1)).data
    assert np.abs(out - D27).max() < 1e-9


def test_pq_subband_isolation(D27):
    out = pq_privatize(D27, PrivacyParams(delta=0.1, eta=0.0, seed=2)).data
    assert np.abs(details(out) - details(D27)).max() < 1e-9


def test_pq_deterministic(D27):
    p = PrivacyParams(delta=0.1, seed=3)
    a, b = (pq_privatize(D27, p, retain_selectors=True) for _ in range(2))
    np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(a.selectors, b.selectors)
    assert a.selectors.shape == (9, 5)
    assert pq_privatize(D27, p).selectors is None


# ---- imaging ----

def test_image_small_delta_is_real():
    img = np.random.default_rng(5).random((27, 27))
    Z = pq_embed_image(img, PrivacyParams(delta=0.1, seed=1))
    assert np.all(Z.imag == 0)


def test_image_large_delta_goes_complex():
    img = np.random.default_rng(6).random((27, 27))
    hits = [np.any(pq_embed_image(img, PrivacyParams(delta=0.7, seed=s)).imag != 0) for s in range(5)]
    assert all(hits)


def test_modulus_view_shape_and_range():
    img = np.random.default_rng(7).random((27, 20))
    M = modulus_view(pq_embed_image(img, PrivacyParams(delta=0.7, seed=2)))
    assert M.shape == img.shape
    assert M.min() == pytest.approx(0.0) and M.max() == pytest.approx(1.0)


def test_image_rows_checked():
    with pytest.raises(ShapeMismatch):
        pq_embed_image(np.random.default_rng(0).random((28, 28)), PrivacyParams())


# ---- dispatcher ----

def test_none_mechanism_copies(D27):
    res = privatize(D27, "none", PrivacyParams())
    np.testing.assert_array_equal(res.data, D27)
    assert res.data is not D27


def test_unknown_mechanism(D27):
    with pytest.raises(ValueError):
        privatize(D27, "rr", PrivacyParams())
