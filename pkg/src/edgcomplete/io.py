"""CSV readers and writers for point clouds, dense matrices and observations.

Observation files have columns ``i, j, d2`` with 1-based point indices and
squared distances; repeated rows are meaningful (multiset sampling).
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .basis import ObservationSet


class CSVFormatError(ValueError):
    """A malformed row in an input file; the message carries the line number."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_rows(path, expected_cols: int | None = None):
    """Yield ``(line_number, [floats])``, skipping blank lines and an optional header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = True
        for row in reader:
            lineno = reader.line_num
            row = [tok.strip() for tok in row]
            if not row or all(tok == "" for tok in row):
                continue
            if row[0].startswith("#"):
                continue
            if first:
                first = False
                if not all(_is_number(tok) for tok in row):
                    continue
            try:
                vals = [float(tok) for tok in row]
            except ValueError:
                raise CSVFormatError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
            if expected_cols is not None and len(vals) != expected_cols:
                raise CSVFormatError(
                    f"{path}:{lineno}: expected {expected_cols} columns, got {len(vals)}")
            if not all(np.isfinite(vals)):
                raise CSVFormatError(f"{path}:{lineno}: non-finite value")
            yield lineno, vals


def read_points(path) -> np.ndarray:
    """Point cloud from a CSV with one point per row and an optional header."""
    rows = []
    width = None
    for lineno, vals in _read_rows(path):
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise CSVFormatError(f"{path}:{lineno}: expected {width} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_points(path, points) -> None:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(X.shape[1])])
        for row in X:
            w.writerow([_fmt(v) for v in row])


def read_matrix(path) -> np.ndarray:
    """Dense square matrix from a headerless (or headed) CSV."""
    M = read_points(path)
    if M.shape[0] != M.shape[1]:
        raise CSVFormatError(f"{path}: matrix is {M.shape[0]}x{M.shape[1]}, expected square")
    return M


def write_matrix(path, M) -> None:
    M = np.asarray(M, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([_fmt(v) for v in row])


def read_observations(path, n: int | None = None) -> ObservationSet:
    """Observations from an ``i, j, d2`` CSV (1-based indices).

    ``n`` defaults to the largest index that appears in the file.
    """
    pairs = []
    values = []
    for lineno, (i, j, d2) in _read_rows(path, expected_cols=3):
        if i != int(i) or j != int(j):
            raise CSVFormatError(f"{path}:{lineno}: indices must be integers")
        i, j = int(i), int(j)
        if i < 1 or j < 1 or i == j:
            raise CSVFormatError(f"{path}:{lineno}: invalid pair ({i}, {j})")
        if n is not None and max(i, j) > n:
            raise CSVFormatError(f"{path}:{lineno}: index exceeds n={n}")
        if d2 < 0:
            raise CSVFormatError(f"{path}:{lineno}: negative squared distance {d2}")
        pairs.append((min(i, j) - 1, max(i, j) - 1))
        values.append(d2)
    if not pairs:
        raise CSVFormatError(f"{path}: no observations")
    if n is None:
        n = max(max(p) for p in pairs) + 1
    return ObservationSet(n, np.array(pairs, dtype=np.int64), np.array(values))


def write_observations(path, obs: ObservationSet) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "d2"])
        for (i, j), v in zip(obs.pairs, obs.values):
            w.writerow([int(i) + 1, int(j) + 1, _fmt(v)])


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
