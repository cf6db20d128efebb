"""Differentially private perturbation of tabular data in a 3-band wavelet domain."""

__version__ = "0.1.0"

from .errors import WaveletDPError
from .wavelet import FilterBank, TransformedData, build_operator, default_filter_bank, forward, inverse
from .mechanisms import (Mechanism, PrivacyParams, PrivatizedDataset, ls_plus_privatize, ls_privatize,
                         pq_embed, pq_embed_image, pq_extract, pq_privatize, privatize)
from .attack import SweepConfig, brute_force_decode, decode_probability, denoise_sweep
from .models import nn_predict, predict_logistic, train_logistic, train_shallow_net
from .evaluation import make_synthetic, run_trials
from .fileio import load_csv, load_pgm, write_csv, write_pgm

__all__ = [
    "WaveletDPError", "FilterBank", "TransformedData", "build_operator", "default_filter_bank", "forward",
    "inverse", "Mechanism", "PrivacyParams", "PrivatizedDataset", "ls_privatize", "ls_plus_privatize",
    "pq_privatize", "pq_embed", "pq_extract", "pq_embed_image", "privatize", "SweepConfig", "denoise_sweep",
    "decode_probability", "brute_force_decode", "train_logistic", "predict_logistic", "train_shallow_net",
    "nn_predict", "make_synthetic", "run_trials", "load_csv", "load_pgm", "write_csv", "write_pgm",
]
