"""Five log-domain eigenvalue statistics used as classifier input."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

FLOOR = 1e-300
FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5")
LOG_BASE = "e"


def extract_features(s) -> np.ndarray:
    """Map a spectrum (or a stack of spectra) to
    ``(ln max, ln min, ln arithmetic mean, ln geometric mean, ln population std)``.

    Values below ``FLOOR`` are floored before the log, so a flat spectrum gives
    ``ln(FLOOR)`` as its fifth feature instead of ``-inf``.
    """
    s = np.asarray(s, dtype=float)
    if s.shape[-1] < 2:
        raise ValueError("need at least 2 eigenvalues")
    safe = np.maximum(s, FLOOR)
    lmax = np.max(safe, axis=-1)
    lmin = np.min(safe, axis=-1)
    mean = np.mean(s, axis=-1)
    log_geo = np.mean(np.log(safe), axis=-1)
    # a flat spectrum must hit the sentinel exactly, not a rounding residue
    std = np.where(lmax == lmin, 0.0, np.std(s, axis=-1))
    return np.stack(
        [np.log(lmax), np.log(lmin), np.log(np.maximum(mean, FLOOR)), log_geo,
         np.log(np.maximum(std, FLOOR))],
        axis=-1,
    )


def write_dataset_csv(path: str | Path, X: np.ndarray, y: np.ndarray) -> None:
    """Write ``f1..f5,label`` rows; floats use ``repr`` so the file round-trips exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*FEATURE_NAMES, "label"])
        for row, label in zip(np.asarray(X), np.asarray(y)):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def read_dataset_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != [*FEATURE_NAMES, "label"]:
            raise ValueError(f"unexpected header {header}")
        rows = [row for row in r if row]
    X = np.array([[float(v) for v in row[:5]] for row in rows]).reshape(-1, 5)
    y = np.array([int(row[5]) for row in rows], dtype=int)
    return X, y
