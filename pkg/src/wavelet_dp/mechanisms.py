"""Wavelet-domain input-perturbation mechanisms.

Three mechanisms are provided, all of which perturb only the approximation
subband of a single-level 3-band transform and leave both detail subbands
untouched:

``ls``      Laplace-Sigmoid noise on the approximation of the whole matrix.
``lsplus``  The same mechanism applied independently to disjoint row blocks.
``pq``      Pseudo-quantum steganographic embedding of Laplace noise angles.

All randomness comes from an explicit :class:`numpy.random.Generator`; when
none is passed one is seeded from ``PrivacyParams.seed``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (ArgumentOutOfDomain, DegenerateRange, DeltaOutOfRange, InvalidParameter,
                     ShapeMismatch, ZeroDelta)
from .wavelet import BANDS, TransformedData, forward, get_operator, inverse

# least upper bound on the embedding intensity for real-valued output
DELTA_MAX_REAL = 2.0 / np.sqrt(3.0) - 1.0
# slack for inverse-trig arguments that exceed 1 only through rounding
_DOMAIN_SLACK = 1e-12


class Mechanism(str, enum.Enum):
    NONE = "none"
    LS = "ls"
    LS_PLUS = "lsplus"
    PQ = "pq"


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float = 1.0
    gamma: float = 1.0
    delta: float = 0.1
    eta: float = 0.0
    label_col: int | None = None
    label_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameter(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma > 0:
            raise InvalidParameter(f"gamma must be positive, got {self.gamma}")
        if not self.delta >= 0:
            raise DeltaOutOfRange(f"delta must be nonnegative, got {self.delta}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidParameter(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def eps_prime(self) -> float:
        """Laplace budget used internally by LS / LS+: eps / (1 + e^-gamma)."""
        return self.epsilon / (1.0 + np.exp(-self.gamma))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class PrivatizedDataset:
    data: np.ndarray
    mechanism: Mechanism
    params: PrivacyParams
    trace: np.ndarray | None = None
    selectors: np.ndarray | None = None
    block_rows: int | None = None


@dataclass(frozen=True)
class AngleBundle:
    theta: np.ndarray
    mu1: float
    v1: float


# ---------------------------------------------------------------------------
# shared pieces

def _check_rows(D, rows=None):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {D.shape}")
    m = D.shape[0]
    if rows is None and (m % BANDS or m < 2 * BANDS):
        raise ShapeMismatch(f"row count must be a multiple of {BANDS} and >= {2 * BANDS}, got {m}")
    return D


def _min_max(A):
    mu, v = float(np.max(A)), float(np.min(A))
    if not mu > v:
        raise DegenerateRange(f"matrix is constant (value {mu}); min-max scaling is undefined")
    return mu, v


def _bound(A, mu, v, gamma):
    return gamma * (2.0 * A - mu - v) / (mu - v)


def bound_transform(A, gamma: float) -> np.ndarray:
    """Affinely squash ``A`` onto ``[-gamma, gamma]`` using its own min and max."""
    A = np.asarray(A, dtype=float)
    mu, v = _min_max(A)
    return _bound(A, mu, v, gamma)


def sample_laplace(b: float, rng: np.random.Generator, size=None):
    """Draw Lap(0, b) by inverting the CDF of one uniform per draw.

    Draws at different scales from the same uniform stream are exact
    multiples of one another.
    """
    if not b > 0:
        raise InvalidParameter(f"Laplace scale must be positive, got {b}")
    u = rng.random(size) - 0.5
    a = np.minimum(np.abs(u), np.nextafter(0.5, 0.0))
    return -b * np.sign(u) * np.log1p(-2.0 * a)


def sigmoid(y):
    return 1.0 / (1.0 + np.exp(-y))


def laplace_sigmoid(X, A_star) -> np.ndarray:
    """Shrink Laplace draws ``X`` by the sigmoid of the bounded data values.

    Positive draws are scaled by ``1 - S(A*)`` and negative draws by ``S(A*)``.
    """
    S = sigmoid(np.asarray(A_star, dtype=float))
    X = np.asarray(X, dtype=float)
    return np.where(X >= 0, (1.0 - S) * X, S * X)


def noise_trace(X) -> np.ndarray:
    return np.where(np.asarray(X) >= 0, 1, -1).astype(np.int8)


def laplace_sigmoid_noise(A_star, eps_prime: float, rng: np.random.Generator):
    """Return ``(N, trace)`` for bounded data ``A_star`` at budget ``eps_prime``."""
    A_star = np.asarray(A_star, dtype=float)
    X = sample_laplace(1.0 / eps_prime, rng, A_star.shape)
    return laplace_sigmoid(X, A_star), noise_trace(X)


def binarize_labels(D, label_col, threshold=0.5):
    if label_col is None:
        return D
    col = D[:, label_col]
    if np.iscomplexobj(col):
        raise ShapeMismatch("labels cannot be binarized on complex output")
    D[:, label_col] = (col >= threshold).astype(D.dtype)
    return D


def _resolve_rng(params, rng):
    return params.rng() if rng is None else rng


# ---------------------------------------------------------------------------
# LS / LS+

def _ls_core(D, params, rng):
    op = get_operator(D.shape[0])
    T = forward(op, D)
    mu, v = _min_max(T.approx)
    N, trace = laplace_sigmoid_noise(_bound(T.approx, mu, v, params.gamma), params.eps_prime, rng)
    return inverse(op, T.with_approx(T.approx + N)), trace


def ls_privatize(D, params: PrivacyParams, rng=None, retain_trace=False) -> PrivatizedDataset:
    """LS mechanism on the whole matrix: ``W^T [A + N(A*); d1; d2]``."""
    D = _check_rows(D)
    out, trace = _ls_core(D, params, _resolve_rng(params, rng))
    binarize_labels(out, params.label_col, params.label_threshold)
    return PrivatizedDataset(out, Mechanism.LS, params, trace=trace if retain_trace else None)


def block_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Per-block seed; depends only on (run seed, block index)."""
    return np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])


def _check_block_rows(D, block_rows):
    if block_rows % BANDS or block_rows < 2 * BANDS:
        raise ShapeMismatch(f"block_rows must be a multiple of {BANDS} and >= {2 * BANDS}, got {block_rows}")
    if D.shape[0] % block_rows or D.shape[0] == 0:
        raise ShapeMismatch(f"row count {D.shape[0]} is not divisible by block_rows={block_rows}")


def privatize_block(block, params: PrivacyParams, index: int):
    """LS-privatize one row block with its derived seed; returns ``(data, trace)``.

    Labels are left alone here; LS+ binarizes once after reassembly.
    """
    rng = np.random.default_rng(block_seed(params.seed, index))
    return _ls_core(np.asarray(block, dtype=float), params, rng)


def _to_columns(D, block_rows):
    m, n = D.shape
    nb = m // block_rows
    return D.reshape(nb, block_rows, n).transpose(1, 0, 2).reshape(block_rows, nb * n)


def _from_columns(C, block_rows, n):
    nb = C.shape[1] // n
    return C.reshape(block_rows, nb, n).transpose(1, 0, 2).reshape(nb * block_rows, n)


def _ls_plus_batched(D, params, block_rows):
    # every block becomes a group of columns of one (block_rows x nb*n) matrix
    m, n = D.shape
    nb = m // block_rows
    r = block_rows // BANDS
    op = get_operator(block_rows)
    T = forward(op, _to_columns(D, block_rows))
    A = T.approx.reshape(r, nb, n)
    mu = A.max(axis=(0, 2), keepdims=True)
    v = A.min(axis=(0, 2), keepdims=True)
    flat = np.flatnonzero(~(mu > v))
    if flat.size:
        raise DegenerateRange(f"block {flat[0]} has a constant approximation subband")
    A_star = _bound(A, mu, v, params.gamma)
    scale = 1.0 / params.eps_prime
    X = np.empty_like(A)
    for i in range(nb):
        X[:, i, :] = sample_laplace(scale, np.random.default_rng(block_seed(params.seed, i)), (r, n))
    A_hat = (A + laplace_sigmoid(X, A_star)).reshape(r, nb * n)
    out = _from_columns(inverse(op, T.with_approx(A_hat)), block_rows, n)
    trace = noise_trace(X).transpose(1, 0, 2).reshape(nb * r, n)
    return out, trace


def ls_plus_privatize(D, params: PrivacyParams, block_rows: int = 9, retain_trace=False,
                      workers: int | None = None) -> PrivatizedDataset:
    """LS+ mechanism: LS applied to each ``block_rows``-row block independently.

    With ``workers`` set, blocks are dispatched to a thread pool one at a time;
    otherwise all blocks are transformed together as columns of a single
    matrix.  Both schedules give bit-identical output.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {D.shape}")
    _check_block_rows(D, block_rows)
    if workers is None:
        out, trace = _ls_plus_batched(D, params, block_rows)
    else:
        nb = D.shape[0] // block_rows
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda i: privatize_block(D[i * block_rows:(i + 1) * block_rows], params, i), range(nb)))
        out = np.concatenate([p[0] for p in parts], axis=0)
        trace = np.concatenate([p[1] for p in parts], axis=0)
    binarize_labels(out, params.label_col, params.label_threshold)
    return PrivatizedDataset(out, Mechanism.LS_PLUS, params,
                             trace=trace if retain_trace else None, block_rows=block_rows)


# ---------------------------------------------------------------------------
# pseudo-quantum

def angles_from_values(X) -> AngleBundle:
    """Map values affinely onto angles in [pi/6, pi/3] (max -> pi/3, min -> pi/6)."""
    X = np.asarray(X, dtype=float)
    mu, v = _min_max(X)
    return AngleBundle(np.pi * (X + mu - 2.0 * v) / (6.0 * (mu - v)), mu, v)


def values_from_angles(thetaE, mu1: float, v1: float):
    """Exact affine inverse of :func:`angles_from_values`."""
    if not mu1 > v1:
        raise DegenerateRange(f"need mu1 > v1, got mu1={mu1}, v1={v1}")
    return 6.0 * np.asarray(thetaE) * (mu1 - v1) / np.pi - mu1 + 2.0 * v1


def cosine_branch(selectors, eta: float) -> np.ndarray:
    """Entries that take the arccos branch; probability (1 - eta) / 2 each."""
    return np.asarray(selectors) >= (1.0 + eta) / 2.0


def _check_delta(delta, complex_mode):
    if delta < 0:
        raise DeltaOutOfRange(f"delta must be nonnegative, got {delta}")
    if not complex_mode and delta > DELTA_MAX_REAL:
        raise DeltaOutOfRange(
            f"delta={delta} exceeds {DELTA_MAX_REAL:.6f}; real output needs delta <= 2/sqrt(3) - 1 "
            "(use image mode for complex output)")


def _real_domain(arg, what):
    worst = np.max(np.abs(arg)) if arg.size else 0.0
    if worst > 1.0 + _DOMAIN_SLACK:
        raise ArgumentOutOfDomain(f"{what} argument reaches {worst:.6g}, outside [-1, 1]")
    return np.clip(arg, -1.0, 1.0)


def embed_with_mask(theta, x, cos_mask, delta, complex_mode=False):
    """Steganographic embedding for a fixed branch pattern."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    cos_arg = np.cos(theta) + delta * np.cos(x)
    sin_arg = np.sin(theta) + delta * np.sin(x)
    if complex_mode:
        return np.where(cos_mask, np.arccos(cos_arg.astype(complex)), np.arcsin(sin_arg.astype(complex)))
    cos_arg = _real_domain(np.where(cos_mask, cos_arg, 0.0), "arccos")
    sin_arg = _real_domain(np.where(cos_mask, 0.0, sin_arg), "arcsin")
    return np.where(cos_mask, np.arccos(cos_arg), np.arcsin(sin_arg))


def pq_embed(theta, x, delta: float, eta: float, rng: np.random.Generator, complex_mode=False):
    """Embed noise angles ``x`` into data angles ``theta``.

    Returns ``(thetaE, selectors)`` where ``selectors`` holds the uniform
    draw ``k`` per entry; ``k >= (1 + eta) / 2`` selects the arccos branch.
    """
    theta = theta.theta if isinstance(theta, AngleBundle) else np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape:
        raise ShapeMismatch(f"theta {theta.shape} and x {x.shape} differ in shape")
    _check_delta(delta, complex_mode)
    k = rng.random(theta.shape)
    return embed_with_mask(theta, x, cosine_branch(k, eta), delta, complex_mode), k


def extract_with_mask(thetaE, theta, cos_mask, delta):
    if delta == 0:
        raise ZeroDelta("delta = 0 embeds nothing; extraction divides by delta")
    thetaE = np.asarray(thetaE)
    theta = np.asarray(theta, dtype=float)
    if thetaE.shape != theta.shape or np.shape(cos_mask) != theta.shape:
        raise ShapeMismatch("thetaE, theta and branch pattern must share one shape")
    cos_arg = (np.cos(thetaE) - np.cos(theta)) / delta
    sin_arg = (np.sin(thetaE) - np.sin(theta)) / delta
    if np.iscomplexobj(thetaE):
        return np.where(cos_mask, np.arccos(cos_arg), np.arcsin(sin_arg))
    cos_arg = _real_domain(np.where(cos_mask, cos_arg, 0.0), "arccos")
    sin_arg = _real_domain(np.where(cos_mask, 0.0, sin_arg), "arcsin")
    return np.where(cos_mask, np.arccos(cos_arg), np.arcsin(sin_arg))


def pq_extract(thetaE, theta, selectors, delta: float, eta: float):
    """Recover the embedded noise angles, given the true data angles and selectors."""
    theta = theta.theta if isinstance(theta, AngleBundle) else theta
    return extract_with_mask(thetaE, theta, cosine_branch(selectors, eta), delta)


def _pq_pipeline(D, params, rng, complex_mode):
    op = get_operator(D.shape[0])
    T = forward(op, D)
    angles = angles_from_values(T.approx)
    X = sample_laplace(2.0 / params.epsilon, rng, T.approx.shape)
    x = angles_from_values(X).theta
    thetaE, k = pq_embed(angles, x, params.delta, params.eta, rng, complex_mode=complex_mode)
    A_star = values_from_angles(thetaE, angles.mu1, angles.v1)
    return inverse(op, T.with_approx(A_star)), k


def pq_privatize(D, params: PrivacyParams, rng=None, retain_selectors=False) -> PrivatizedDataset:
    """Pseudo-quantum mechanism with real-valued output (delta <= 2/sqrt(3) - 1)."""
    D = _check_rows(D)
    _check_delta(params.delta, complex_mode=False)
    out, k = _pq_pipeline(D, params, _resolve_rng(params, rng), complex_mode=False)
    binarize_labels(out, params.label_col, params.label_threshold)
    return PrivatizedDataset(out, Mechanism.PQ, params, selectors=k if retain_selectors else None)


def pq_embed_image(img, params: PrivacyParams, rng=None) -> np.ndarray:
    """Pseudo-quantum embedding of a grayscale image, columns as signals.

    ``delta`` may exceed the real-output bound; inverse-trig arguments beyond
    [-1, 1] then take the complex principal branch and the result is complex.
    """
    img = _check_rows(img)
    out, _ = _pq_pipeline(img, params, _resolve_rng(params, rng), complex_mode=True)
    return out


def rescale(M, lo=0.0, hi=1.0) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    top, bottom = M.max(), M.min()
    if top == bottom:
        return np.full(M.shape, lo)
    return lo + (M - bottom) * (hi - lo) / (top - bottom)


def modulus_view(Z, lo=0.0, hi=1.0) -> np.ndarray:
    """Componentwise ``|z|`` rescaled onto the image range ``[lo, hi]``."""
    return rescale(np.abs(Z), lo, hi)


# ---------------------------------------------------------------------------

def privatize(D, mechanism, params: PrivacyParams, *, block_rows=9, retain_trace=False, rng=None):
    """Dispatch to one mechanism by name; ``none`` returns a copy (labels still binarized)."""
    mechanism = Mechanism(mechanism)
    if mechanism is Mechanism.LS:
        return ls_privatize(D, params, rng=rng, retain_trace=retain_trace)
    if mechanism is Mechanism.LS_PLUS:
        return ls_plus_privatize(D, params, block_rows=block_rows, retain_trace=retain_trace)
    if mechanism is Mechanism.PQ:
        return pq_privatize(D, params, rng=rng, retain_selectors=retain_trace)
    data = np.array(D, dtype=float)
    binarize_labels(data, params.label_col, params.label_threshold)
    return PrivatizedDataset(data, Mechanism.NONE, params)
