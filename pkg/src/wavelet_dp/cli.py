"""Command-line front end: ``wavelet-dp {privatize,attack,evaluate,image,synth}``.

Every run is fully determined by its input bytes, flags and ``--seed``.
Outputs are CSV (or PGM for ``image``) plus a ``<out>.meta`` key=value
sidecar; no timestamps or host details are recorded.  Noise traces and
branch selectors are written only when ``--retain-trace`` is given.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .attack import SweepConfig, denoise_sweep
from .errors import IO, USAGE, InvalidParameter, ShapeMismatch, WaveletDPError
from .evaluation import SYNTH_TEST, SYNTH_TRAIN, make_synthetic, run_trials
from .fileio import (TabularDataset, load_csv, load_pgm, write_csv, write_metadata, write_pgm,
                     write_table)
from .mechanisms import Mechanism, PrivacyParams, modulus_view, pq_embed_image, privatize, rescale
from .wavelet import BANDS

COMMANDS = ("privatize", "attack", "evaluate", "image", "synth")
DEFAULT_EPSILON_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    out: str | None = None
    mechanism: str = "ls"
    epsilon: tuple = (1.0,)
    gamma: float = 1.0
    delta: float = 0.1
    eta: float = 0.0
    label_col: str | None = None
    label_threshold: float = 0.5
    seed: int = 0
    block_rows: int = 9
    model: str = "logistic"
    trials: int | None = None
    retain_trace: bool = False
    truncate: bool = False
    delimiter: str = ","
    header: bool = True
    train_size: int = SYNTH_TRAIN
    test_size: int = SYNTH_TEST
    rows: int = SYNTH_TRAIN + SYNTH_TEST
    workers: int | None = None

    def params(self, epsilon=None, label_col=None) -> PrivacyParams:
        return PrivacyParams(epsilon=self.epsilon[0] if epsilon is None else epsilon, gamma=self.gamma,
                             delta=self.delta, eta=self.eta, label_col=label_col,
                             label_threshold=self.label_threshold, seed=self.seed)


def run_metadata(cfg: RunConfig, epsilon=None, label_index=None) -> dict:
    eps = ",".join(repr(float(e)) for e in cfg.epsilon) if epsilon is None else repr(float(epsilon))
    return {"command": cfg.command, "mechanism": cfg.mechanism, "epsilon": eps, "gamma": repr(cfg.gamma),
            "delta": repr(cfg.delta), "eta": repr(cfg.eta), "seed": cfg.seed, "block_rows": cfg.block_rows,
            "label_col": "" if label_index is None else label_index,
            "label_threshold": repr(cfg.label_threshold), "version": __version__}


def params_from_metadata(meta: dict) -> PrivacyParams:
    """Rebuild the privacy parameters recorded in a single-epsilon sidecar."""
    label = meta.get("label_col", "")
    return PrivacyParams(epsilon=float(meta["epsilon"]), gamma=float(meta["gamma"]), delta=float(meta["delta"]),
                         eta=float(meta["eta"]), label_col=int(label) if label else None,
                         label_threshold=float(meta["label_threshold"]), seed=int(meta["seed"]))


# ---------------------------------------------------------------------------
# commands

def _load(cfg: RunConfig) -> TabularDataset:
    if cfg.input is None:
        raise InvalidParameter(f"{cfg.command} needs an input file")
    return load_csv(cfg.input, delimiter=cfg.delimiter, header=cfg.header, label_col=cfg.label_col)


def _row_multiple(cfg: RunConfig) -> int:
    return cfg.block_rows if cfg.mechanism == Mechanism.LS_PLUS.value else BANDS


def _fit_rows(ds: TabularDataset, cfg: RunConfig) -> np.ndarray:
    k = _row_multiple(cfg)
    m = ds.data.shape[0]
    if m % k == 0:
        return ds.data
    if not cfg.truncate:
        raise ShapeMismatch(f"{m} rows is not a multiple of {k}; pass --truncate to drop the last {m % k}")
    logging.getLogger(__name__).warning("truncating %d rows to %d", m, m - m % k)
    return ds.data[:m - m % k]


def _single_epsilon(cfg: RunConfig) -> float:
    if len(cfg.epsilon) != 1:
        raise InvalidParameter(f"{cfg.command} takes a single --epsilon value")
    return cfg.epsilon[0]


def _require_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise InvalidParameter(f"{cfg.command} needs --out")
    return cfg.out


def cmd_privatize(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    eps = _single_epsilon(cfg)
    ds = _load(cfg)
    D = _fit_rows(ds, cfg)
    params = cfg.params(eps, ds.label_index)
    res = privatize(D, cfg.mechanism, params, block_rows=cfg.block_rows, retain_trace=cfg.retain_trace)
    write_csv(TabularDataset(ds.columns, res.data), out, columns=ds.columns if cfg.header else None,
              delimiter=cfg.delimiter)
    write_metadata(run_metadata(cfg, eps, ds.label_index), out + ".meta")
    if cfg.retain_trace:
        if res.trace is not None:
            np.savetxt(out + ".trace.csv", res.trace, fmt="%d", delimiter=",")
        if res.selectors is not None:
            np.savetxt(out + ".selectors.csv", res.selectors, fmt="%.17g", delimiter=",")


def cmd_attack(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    ds = _load(cfg)
    D = _fit_rows(ds, cfg)
    sweep = SweepConfig(trials=cfg.trials or 100, epsilon_grid=tuple(cfg.epsilon), gamma=cfg.gamma)
    report = denoise_sweep(D, sweep, mechanism=cfg.mechanism, seed=cfg.seed, block_rows=cfg.block_rows,
                           label_col=ds.label_index)
    write_table(report.rows(), ["epsilon", "H", "trials", "grid"], out)
    write_metadata(run_metadata(cfg, label_index=ds.label_index), out + ".meta")


def cmd_evaluate(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    if cfg.input is None:
        ds = make_synthetic(cfg.train_size + cfg.test_size, seed=cfg.seed)
    else:
        ds = _load(cfg)
        if ds.label_index is None:
            ds.label_index = ds.data.shape[1] - 1
    summary, per_trial = [], []
    header = None
    for eps in cfg.epsilon:
        report = run_trials(ds, cfg.mechanism, cfg.params(eps), cfg.model, cfg.trials or 100,
                            cfg.train_size, cfg.test_size, cfg.seed, block_rows=cfg.block_rows,
                            workers=cfg.workers)
        s = report.summary()
        header = list(s)
        summary.append(list(s.values()))
        per_trial.extend((eps, i, a) for i, a in enumerate(report.accuracies))
    write_table(summary, header, out)
    write_table(per_trial, ["epsilon", "trial", "accuracy"], out + ".trials.csv")
    write_metadata(run_metadata(cfg, label_index=ds.label_index), out + ".meta")


def cmd_image(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    eps = _single_epsilon(cfg)
    if cfg.input is None:
        raise InvalidParameter("image needs an input PGM")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        img, maxval = load_pgm(cfg.input)
    for w in caught:
        logging.getLogger(__name__).warning("%s", w.message)
    Z = pq_embed_image(img, cfg.params(eps))
    prefix = out[:-4] if out.endswith(".pgm") else out
    write_pgm(modulus_view(Z), prefix + "_modulus.pgm", maxval=maxval)
    write_pgm(rescale(Z.real), prefix + "_real.pgm", maxval=maxval)
    write_pgm(rescale(Z.imag), prefix + "_imag.pgm", maxval=maxval)
    meta = run_metadata(cfg, eps)
    meta["mechanism"] = Mechanism.PQ.value
    meta["rows"], meta["cols"] = img.shape
    write_metadata(meta, prefix + ".meta")


def cmd_synth(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    ds = make_synthetic(cfg.rows, seed=cfg.seed)
    write_csv(ds, out, delimiter=cfg.delimiter)


DISPATCH = {"privatize": cmd_privatize, "attack": cmd_attack, "evaluate": cmd_evaluate,
            "image": cmd_image, "synth": cmd_synth}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        DISPATCH[cfg.command](cfg)
    except WaveletDPError as exc:
        print(f"wavelet-dp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"wavelet-dp: error: {exc}", file=sys.stderr)
        return IO
    except ValueError as exc:
        print(f"wavelet-dp: error: {exc}", file=sys.stderr)
        return USAGE
    return 0


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _epsilons(text):
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty epsilon list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wavelet-dp", description="Wavelet-domain differential privacy for tabular data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out", help="output path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--verbose", "-v", action="store_true", help="show per-trial training warnings")

    csvopts = _Parser(add_help=False)
    csvopts.add_argument("--delimiter", default=",")
    csvopts.add_argument("--no-header", dest="header", action="store_false")
    csvopts.add_argument("--label-col", help="label column, by name or 0-based index")
    csvopts.add_argument("--label-threshold", type=float, default=0.5)

    mech = _Parser(add_help=False)
    mech.add_argument("--epsilon", type=_epsilons, default=None,
                      help="privacy budget (comma list for attack / evaluate)")
    mech.add_argument("--gamma", type=float, default=1.0)
    mech.add_argument("--delta", type=float, default=0.1)
    mech.add_argument("--eta", type=float, default=0.0)
    mech.add_argument("--block-rows", type=int, default=9)
    mech.add_argument("--truncate", action="store_true", help="drop trailing rows to fit the mechanism")

    s = sub.add_parser("privatize", parents=[common, csvopts, mech], help="privatize a CSV file")
    s.add_argument("input")
    s.add_argument("--mechanism", choices=["ls", "lsplus", "pq"], default="ls")
    s.add_argument("--retain-trace", action="store_true",
                   help="also write the noise sign trace (ls/lsplus) or PQ selectors")

    s = sub.add_parser("attack", parents=[common, csvopts, mech], help="factor-sweep de-noising score H")
    s.add_argument("input")
    s.add_argument("--mechanism", choices=["ls", "lsplus"], default="ls")
    s.add_argument("--trials", type=int, default=100)

    s = sub.add_parser("evaluate", parents=[common, csvopts, mech], help="learnability trials")
    s.add_argument("input", nargs="?", help="CSV with a label column (default: bundled synthetic data)")
    s.add_argument("--mechanism", choices=["none", "ls", "lsplus", "pq"], default="ls")
    s.add_argument("--model", choices=["logistic", "nn"], default="logistic")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--train-size", type=int, default=SYNTH_TRAIN)
    s.add_argument("--test-size", type=int, default=SYNTH_TEST)
    s.add_argument("--workers", type=int, default=None)

    s = sub.add_parser("image", parents=[common, mech], help="pseudo-quantum embedding of a PGM image")
    s.add_argument("input")

    s = sub.add_parser("synth", parents=[common], help="write the bundled synthetic dataset")
    s.add_argument("--rows", type=int, default=SYNTH_TRAIN + SYNTH_TEST)
    s.add_argument("--delimiter", default=",")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    d.pop("verbose", None)
    eps = d.pop("epsilon", None)
    if eps is None:
        eps = DEFAULT_EPSILON_GRID if ns.command in ("attack", "evaluate") else (1.0,)
    known = RunConfig.__dataclass_fields__
    cfg = RunConfig(command=d.pop("command"), epsilon=tuple(eps),
                    **{k: v for k, v in d.items() if k in known})
    if ns.command == "image":
        cfg.mechanism = Mechanism.PQ.value
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="wavelet-dp: %(levelname)s: %(message)s")
    if not ns.verbose:
        logging.getLogger("wavelet_dp.models").setLevel(logging.ERROR)
    try:
        cfg = config_from_args(ns)
    except WaveletDPError as exc:
        print(f"wavelet-dp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
