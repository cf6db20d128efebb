"""Single-level 3-band orthonormal wavelet transform, applied column-wise.

The transform matrix ``W`` is never materialised.  Row ``r`` of the
approximation block holds the low-pass taps at columns ``3r, 3r+1, ...``
(wrapping modulo ``N``); the two detail blocks are built the same way from
the high-pass taps.  ``forward`` and ``inverse`` are strided circular
correlations / convolutions costing ``O(N * n_cols * taps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidSize, OrthonormalityFailure, ShapeMismatch

BANDS = 3

# 2-regular 3-band bank (Lin, Xu, Shi & Hao 2006).
ALPHA = (0.33838609728386, 0.53083618701374, 0.72328627674361,
         0.23896417190576, 0.04651408217589, -0.14593600755399)
BETA1 = (-0.11737701613483, 0.54433105395181, -0.01870574735313,
         -0.69911956479289, -0.13608276348796, 0.42695403781698)
BETA2 = (0.40363686892892, -0.62853936105471, 0.46060475252131,
         -0.40363686892892, -0.07856742013185, 0.24650202866523)

SELF_CHECK_TOL = 1e-8
DENSE_MAX_SIZE = 81


@dataclass(frozen=True)
class FilterBank:
    alpha: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    bands: int = BANDS
    regularity: int = 2

    def __post_init__(self):
        taps = []
        for name in ("alpha", "beta1", "beta2"):
            v = np.asarray(getattr(self, name), dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
            taps.append(v.shape)
        if len(set(taps)) != 1 or len(taps[0]) != 1:
            raise ValueError(f"filters must be 1-D and equal length, got {taps}")

    @property
    def length(self) -> int:
        return self.alpha.shape[0]

    @property
    def filters(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.alpha, self.beta1, self.beta2

    def identities(self) -> dict[str, float]:
        """Residuals of the orthonormal filter-bank identities.

        Every value should be ~0 for a valid bank: unit norms, low-pass sum
        equal to sqrt(M), zero high-pass sums, mutual orthogonality of the
        low-pass and high-pass taps, and vanishing first moments of the
        high-pass taps (2-regularity).
        """
        a, b1, b2 = self.filters
        i = np.arange(1, self.length + 1)
        return {
            "norm_alpha": np.linalg.norm(a) - 1.0,
            "norm_beta1": np.linalg.norm(b1) - 1.0,
            "norm_beta2": np.linalg.norm(b2) - 1.0,
            "sum_alpha": a.sum() - np.sqrt(self.bands),
            "sum_beta1": b1.sum(),
            "sum_beta2": b2.sum(),
            "alpha_dot_beta1": a @ b1,
            "alpha_dot_beta2": a @ b2,
            "moment_beta1": i @ b1,
            "moment_beta2": i @ b2,
        }


def default_filter_bank() -> FilterBank:
    return FilterBank(ALPHA, BETA1, BETA2)


@dataclass(frozen=True)
class TransformedData:
    approx: np.ndarray
    detail1: np.ndarray
    detail2: np.ndarray

    def __post_init__(self):
        shapes = {self.approx.shape, self.detail1.shape, self.detail2.shape}
        if len(shapes) != 1:
            raise ShapeMismatch(f"subband shapes differ: {sorted(shapes)}")

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.approx, self.detail1, self.detail2

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.blocks, axis=0)

    def with_approx(self, approx) -> "TransformedData":
        return TransformedData(np.asarray(approx), self.detail1, self.detail2)

    @classmethod
    def from_stacked(cls, Y) -> "TransformedData":
        Y = np.asarray(Y)
        if Y.shape[0] % BANDS:
            raise ShapeMismatch(f"row count {Y.shape[0]} is not a multiple of {BANDS}")
        return cls(*np.split(Y, BANDS, axis=0))


@dataclass(frozen=True)
class WaveletOperator:
    size: int
    filters: FilterBank = field(default_factory=default_filter_bank)

    @property
    def rows_per_band(self) -> int:
        return self.size // BANDS

    def _tap_index(self, k: int) -> np.ndarray:
        # signal positions touched by tap k across all rows of one band
        return (BANDS * np.arange(self.rows_per_band) + k) % self.size

    def forward(self, D) -> TransformedData:
        return forward(self, D)

    def inverse(self, T: TransformedData) -> np.ndarray:
        return inverse(self, T)


def build_operator(fb: FilterBank | None = None, N: int = 9) -> WaveletOperator:
    """Construct a size-``N`` operator and verify it is orthogonal.

    Because ``W W^T`` is block-circulant (it depends only on the row offset
    within and across bands), it equals the identity iff it does so on the
    first row of each band.  The build-time check therefore pushes those three
    unit vectors through ``inverse`` then ``forward``.
    """
    fb = default_filter_bank() if fb is None else fb
    if int(N) != N or N < fb.length or N % BANDS:
        raise InvalidSize(f"signal length must be a multiple of {BANDS} and >= {fb.length}, got {N}")
    op = WaveletOperator(int(N), fb)

    probe = np.zeros((op.size, BANDS))
    for b in range(BANDS):
        probe[b * op.rows_per_band, b] = 1.0
    residual = np.abs(forward(op, inverse(op, TransformedData.from_stacked(probe))).stacked() - probe).max()
    if residual > SELF_CHECK_TOL:
        raise OrthonormalityFailure(f"W W^T deviates from identity by {residual:.3e}")
    return op


def _as_columns(D):
    D = np.asarray(D)
    if D.ndim == 1:
        return D[:, None], True
    if D.ndim != 2:
        raise ShapeMismatch(f"expected a vector or matrix, got {D.ndim}-D input")
    return D, False


def forward(op: WaveletOperator, D) -> TransformedData:
    """Apply ``W`` to every column of ``D`` (a length-N vector is accepted too)."""
    D, vector = _as_columns(D)
    if D.shape[0] != op.size:
        raise ShapeMismatch(f"input has {D.shape[0]} rows, operator size is {op.size}")
    dtype = np.result_type(D.dtype, np.float64)
    out = []
    for f in op.filters.filters:
        acc = np.zeros((op.rows_per_band, D.shape[1]), dtype=dtype)
        for k, tap in enumerate(f):
            acc += tap * D[op._tap_index(k)]
        out.append(acc[:, 0] if vector else acc)
    return TransformedData(*out)


def inverse(op: WaveletOperator, T: TransformedData) -> np.ndarray:
    """Apply ``W^T`` to the stacked subbands, returning the signal matrix."""
    vector = T.approx.ndim == 1
    blocks = [b[:, None] if vector else b for b in T.blocks]
    if blocks[0].shape[0] != op.rows_per_band:
        raise ShapeMismatch(
            f"subbands have {blocks[0].shape[0]} rows, operator expects {op.rows_per_band}")
    dtype = np.result_type(*blocks, np.float64)
    X = np.zeros((op.size, blocks[0].shape[1]), dtype=dtype)
    for f, block in zip(op.filters.filters, blocks):
        for k, tap in enumerate(f):
            # positions within one tap are distinct, so fancy += is safe
            X[op._tap_index(k)] += tap * block
    return X[:, 0] if vector else X


def dense_matrix(op: WaveletOperator) -> np.ndarray:
    """Explicit ``N x N`` transform matrix, for test oracles only (N <= 81)."""
    if op.size > DENSE_MAX_SIZE:
        raise InvalidSize(f"dense construction is limited to N <= {DENSE_MAX_SIZE}")
    N, L = op.size, op.filters.length
    W = np.zeros((N, N))
    for b, f in enumerate(op.filters.filters):
        for r in range(N // BANDS):
            for k in range(L):
                W[b * (N // BANDS) + r, (BANDS * r + k) % N] += f[k]
    return W


def write_dense(op: WaveletOperator, path) -> None:
    """Dump the dense matrix as plain text, row-major, shortest round-trip floats."""
    W = dense_matrix(op)
    with open(path, "w") as fh:
        for row in W:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


@lru_cache(maxsize=64)
def get_operator(N: int) -> WaveletOperator:
    """Cached operator for the default filter bank."""
    return build_operator(default_filter_bank(), N)
