"""CSV / PGM / metadata-sidecar readers and writers.

Floats are written with ``repr``, which is the shortest decimal string that
round-trips exactly, so load -> write -> load reproduces the matrix bit for
bit.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IoError, NonNumericCell, ParseError, RaggedRows, UnsupportedFormat


@dataclass
class TabularDataset:
    columns: list[str]
    data: np.ndarray
    provenance: str = ""
    label_index: int | None = None

    @property
    def shape(self):
        return self.data.shape

    def predictors(self) -> np.ndarray:
        if self.label_index is None:
            return self.data
        return np.delete(self.data, self.label_index, axis=1)

    def labels(self) -> np.ndarray:
        if self.label_index is None:
            raise ValueError("dataset has no label column")
        return self.data[:, self.label_index]


def resolve_column(columns, col) -> int | None:
    """Column by name, or by integer index (negative allowed)."""
    if col is None:
        return None
    if isinstance(col, str) and col in columns:
        return columns.index(col)
    try:
        i = int(col)
    except (TypeError, ValueError):
        raise ParseError(f"no column named {col!r}") from None
    if not -len(columns) <= i < len(columns):
        raise ParseError(f"column index {i} out of range for {len(columns)} columns")
    return i % len(columns)


def _open(path, mode, **kw):
    try:
        return open(path, mode, **kw)
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def load_csv(path, delimiter=",", header=True, label_col=None) -> TabularDataset:
    with _open(path, "r", newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise ParseError(f"{path}: file is empty")
    if header:
        columns, body, first = [c.strip() for c in rows[0]], rows[1:], 2
    else:
        columns, body, first = [f"c{i}" for i in range(len(rows[0]))], rows, 1
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(columns)
    data = np.empty((len(body), width))
    for i, row in enumerate(body):
        line = i + first
        if len(row) != width:
            raise RaggedRows(f"{path}: row {line} has {len(row)} fields, expected {width}", row=line)
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise NonNumericCell(f"{path}: row {line}, column {columns[j]!r}: {cell!r} is not a finite number",
                                     row=line, col=columns[j])
            data[i, j] = v
    return TabularDataset(columns, data, provenance=os.fspath(path),
                          label_index=resolve_column(columns, label_col))


def write_csv(dataset, path, columns=None, delimiter=",") -> None:
    if isinstance(dataset, TabularDataset):
        columns, data = dataset.columns, dataset.data
    else:
        data = np.asarray(dataset)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {data.shape}")
    with _open(path, "w", newline="") as fh:
        if columns is not None:
            fh.write(delimiter.join(columns) + "\n")
        for row in data.tolist():
            fh.write(delimiter.join(map(repr, row)) + "\n")


def write_table(rows, header, path, delimiter=",") -> None:
    """Small heterogeneous tables (reports); floats via ``repr``."""
    with _open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# metadata sidecar

def write_metadata(meta: dict, path) -> None:
    with _open(path, "w") as fh:
        for key, value in meta.items():
            if "\n" in str(value) or "=" in str(key):
                raise ValueError(f"metadata entry {key!r} cannot be written as key=value")
            fh.write(f"{key}={'' if value is None else value}\n")


def read_metadata(path) -> dict[str, str]:
    meta = {}
    with _open(path, "r") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError(f"{path}: line {n} is not key=value", row=n)
            meta[key] = value
    return meta


# ---------------------------------------------------------------------------
# PGM

def _pgm_tokens(buf: bytes, count: int, pos: int = 0):
    """Read ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise UnsupportedFormat("truncated PGM header")
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos


def load_pgm(path, crop=True):
    """Return ``(image, maxval)`` with pixel values mapped to [0, 1].

    When ``crop`` is set, trailing rows are dropped down to a multiple of 3
    (with a warning) so columns can be transformed.
    """
    with _open(path, "rb") as fh:
        buf = fh.read()
    (magic, w, h, maxval), pos = _pgm_tokens(buf, 4)
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormat(f"{path}: not a PGM file (magic {magic!r})")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise UnsupportedFormat(f"{path}: malformed PGM header") from None
    if not 0 < maxval <= 65535 or w <= 0 or h <= 0:
        raise UnsupportedFormat(f"{path}: unsupported dimensions or maxval ({w}x{h}, maxval {maxval})")
    if magic == b"P5":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        raw = buf[pos + 1:]
        need = w * h * np.dtype(dtype).itemsize
        if len(raw) < need:
            raise UnsupportedFormat(f"{path}: pixel data truncated")
        pixels = np.frombuffer(raw[:need], dtype=dtype).astype(float)
    else:
        values, _ = _pgm_tokens(buf, w * h, pos)
        pixels = np.array([int(v) for v in values], dtype=float)
    img = pixels.reshape(h, w) / maxval
    if crop and h % 3:
        keep = h - h % 3
        warnings.warn(f"{path}: cropping {h} rows to {keep} (multiple of 3)", stacklevel=2)
        img = img[:keep]
    return img, maxval


def write_pgm(img, path, maxval=255, binary=True) -> None:
    """Write an image with values in [0, 1] (clipped) at the given bit depth."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if not 0 < maxval <= 65535:
        raise UnsupportedFormat(f"maxval {maxval} outside 1..65535")
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.int64)
    h, w = img.shape
    with _open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            fh.write(q.astype(np.uint8 if maxval < 256 else ">u2").tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
            for row in q:
                fh.write((" ".join(map(str, row)) + "\n").encode())
