"""De-noising experiments against the mechanisms.

These are measurement harnesses: ``denoise_sweep`` scores candidates against
the original data, which only the experimenter holds.  The only mechanism
state read is what a retain-trace run exposes (sign trace or selectors).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSize, MissingTrace, ShapeMismatch, TooLarge, ZeroDelta
from .mechanisms import (Mechanism, PrivacyParams, PrivatizedDataset, _from_columns, _to_columns,
                         ls_plus_privatize, ls_privatize)
from .wavelet import BANDS, TransformedData, get_operator, inverse

MAX_SELECTORS = 20


def _default_r_grid():
    return tuple(np.round(np.arange(-10, 11) / 10.0, 10))


@dataclass(frozen=True)
class SweepConfig:
    r_grid: tuple = field(default_factory=_default_r_grid)
    trials: int = 100
    epsilon_grid: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)
    gamma: float = 1.0

    def __post_init__(self):
        if len(self.r_grid) == 0:
            raise ValueError("r_grid must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class AttackReport:
    epsilons: list
    H: list
    trials: int
    r_grid: tuple
    per_trial: list = field(default_factory=list)

    def grid_description(self) -> str:
        r = self.r_grid
        return f"r in [{min(r):g}, {max(r):g}] ({len(r)} values)"

    def rows(self):
        return [(eps, h, self.trials, self.grid_description()) for eps, h in zip(self.epsilons, self.H)]


def trace_backprojection(trace, rows: int, block_rows: int | None = None) -> np.ndarray:
    """``W^T [trace; 0; 0]``, blockwise when ``block_rows`` is given."""
    trace = np.asarray(trace, dtype=float)
    br = rows if block_rows is None else block_rows
    n = trace.shape[1]
    if rows % br or trace.shape[0] != rows // BANDS:
        raise ShapeMismatch(f"trace shape {trace.shape} does not fit {rows} rows / blocks of {br}")
    r = br // BANDS
    cols = _to_columns(trace, r)
    zero = np.zeros_like(cols)
    return _from_columns(inverse(get_operator(br), TransformedData(cols, zero, zero)), br, n)


def denoise_candidate(D_hat, trace, r, block_rows=None) -> np.ndarray:
    """``D_hat - W^T [r * trace; 0; 0]``; ``r`` may be a scalar or per-entry array."""
    D_hat = np.asarray(D_hat, dtype=float)
    return D_hat - trace_backprojection(np.asarray(r) * np.asarray(trace), D_hat.shape[0], block_rows)


def sweep_h(D_original, privatized: PrivatizedDataset, r_grid) -> tuple[float, float]:
    """Single-trial score: ``min_r mean|D - candidate(r)|`` and the minimising r."""
    if privatized.trace is None:
        raise MissingTrace("no noise trace retained; rerun the mechanism with retain_trace")
    D = np.asarray(D_original, dtype=float)
    if D.shape != privatized.data.shape:
        raise ShapeMismatch(f"original {D.shape} vs privatized {privatized.data.shape}")
    B = trace_backprojection(privatized.trace, D.shape[0], privatized.block_rows)
    # candidate(r) - D = (D_hat - D) - r B, affine in r
    resid = privatized.data - D
    scores = [np.mean(np.abs(resid - r * B)) for r in r_grid]
    i = int(np.argmin(scores))
    return float(scores[i]), float(r_grid[i])


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)]).generate_state(1, np.uint64)[0])


def denoise_sweep(D_original, cfg: SweepConfig | None = None, *, mechanism="ls", seed: int = 0,
                  block_rows: int = 9, label_col: int | None = None) -> AttackReport:
    """Average de-noising score ``H`` per epsilon over ``cfg.trials`` fresh privatizations.

    Trial ``t`` uses the same derived seed at every epsilon, so the noise
    draws differ across the epsilon grid only by their scale.
    """
    cfg = SweepConfig() if cfg is None else cfg
    mechanism = Mechanism(mechanism)
    if mechanism not in (Mechanism.LS, Mechanism.LS_PLUS):
        raise ValueError(f"the factor sweep applies to ls / lsplus, not {mechanism.value}")
    D = np.asarray(D_original, dtype=float)
    H, per_trial = [], []
    for eps in cfg.epsilon_grid:
        scores = []
        for t in range(cfg.trials):
            params = PrivacyParams(epsilon=eps, gamma=cfg.gamma, label_col=label_col, seed=trial_seed(seed, t))
            if mechanism is Mechanism.LS:
                priv = ls_privatize(D, params, retain_trace=True)
            else:
                priv = ls_plus_privatize(D, params, block_rows=block_rows, retain_trace=True)
            scores.append(sweep_h(D, priv, cfg.r_grid)[0])
        per_trial.append(scores)
        H.append(float(np.mean(scores)))
    return AttackReport(list(cfg.epsilon_grid), H, cfg.trials, tuple(cfg.r_grid), per_trial)


def decode_probability(m: int, n: int) -> float:
    """Chance of guessing every branch selector of an ``m x n`` dataset at eta = 0.

    The approximation subband has ``(m/3) * n`` selectors, one fair bit each.
    """
    if m % BANDS or m <= 0 or n <= 0:
        raise InvalidSize(f"m must be a positive multiple of {BANDS} and n positive, got {m}x{n}")
    return 2.0 ** -((m // BANDS) * n)


def _entry_consistent(thetaE, theta, cos_branch, delta, tol):
    mask = np.full(theta.shape, cos_branch)
    with np.errstate(invalid="ignore"):
        cos_arg = (np.cos(thetaE) - np.cos(theta)) / delta
        sin_arg = (np.sin(thetaE) - np.sin(theta)) / delta
        arg = cos_arg if cos_branch else sin_arg
        ok = np.abs(arg) <= 1.0 + 1e-12
        x = np.where(mask, np.arccos(np.clip(arg, -1, 1)), np.arcsin(np.clip(arg, -1, 1)))
    return ok & (x >= np.pi / 6 - tol) & (x <= np.pi / 3 + tol)


def brute_force_decode(thetaE, theta, delta: float, eta: float, tol: float = 1e-9) -> list[np.ndarray]:
    """All branch patterns (True = arccos) whose extraction lands in [pi/6, pi/3].

    Branches of zero probability (arccos when eta = 1) are never proposed.
    Consistency is decided entry by entry, so the admissible set is the
    Cartesian product of per-entry admissible branches.
    """
    thetaE = np.asarray(thetaE, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if thetaE.shape != theta.shape:
        raise ShapeMismatch(f"thetaE {thetaE.shape} vs theta {theta.shape}")
    if thetaE.size > MAX_SELECTORS:
        raise TooLarge(f"{thetaE.size} selectors exceed the enumeration bound of {MAX_SELECTORS}")
    if delta == 0:
        raise ZeroDelta("delta = 0 embeds nothing; there is no branch to decode")
    ok_cos = _entry_consistent(thetaE, theta, True, delta, tol) if eta < 1 else np.zeros(theta.shape, bool)
    ok_sin = _entry_consistent(thetaE, theta, False, delta, tol)
    choices = [[b for b, ok in ((True, c), (False, s)) if ok]
               for c, s in zip(ok_cos.ravel(), ok_sin.ravel())]
    return [np.array(p, dtype=bool).reshape(theta.shape) for p in itertools.product(*choices)]
