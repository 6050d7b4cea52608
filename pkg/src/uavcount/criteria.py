"""AIC and MDL source-number estimates from a covariance spectrum.

``log L_m`` compares the geometric and arithmetic means of the ``M - m``
smallest eigenvalues. Both criteria use the form
``-2 (M - m) N log L_m + penalty(m)`` evaluated in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FLOOR = 1e-300


@dataclass(frozen=True)
class CriterionCurve:
    values: np.ndarray
    argmin: int


def _sorted(s) -> np.ndarray:
    s = np.sort(np.maximum(np.asarray(s, dtype=float), FLOOR), axis=-1)[..., ::-1]
    return s


def likelihood_ratio_L(s, m: int) -> float:
    """``log L_m`` (natural log) for one spectrum; always <= 0."""
    s = _sorted(s)
    M = s.shape[-1]
    if not 0 <= m <= M - 1:
        raise ValueError(f"m must lie in 0..{M - 1}")
    tail = s[m:]
    return float(np.mean(np.log(tail)) - math.log(np.mean(tail)))


def log_likelihood_ratios(s) -> np.ndarray:
    """``log L_m`` for m = 0..M-1; works on a stack of spectra (last axis)."""
    s = _sorted(s)
    M = s.shape[-1]
    # suffix sums over the smallest eigenvalues
    rev = s[..., ::-1]
    counts = np.arange(1, M + 1)
    mean_log = (np.cumsum(np.log(rev), axis=-1) / counts)[..., ::-1]
    mean = (np.cumsum(rev, axis=-1) / counts)[..., ::-1]
    return np.minimum(mean_log - np.log(mean), 0.0)


def _curve(s, N: int, penalty: np.ndarray, direct: bool):
    if N < 1:
        raise ValueError("N must be >= 1")
    s = np.asarray(s, dtype=float)
    M = s.shape[-1]
    m = np.arange(M)
    log_l = log_likelihood_ratios(s)
    if direct:
        # raise L_m to the (M-m)N power in floating point, as the formula is
        # printed; underflows to 0 (and the term to +inf) for large M
        with np.errstate(under="ignore", divide="ignore"):
            powered = np.exp(log_l) ** ((M - m) * N)
            lik = -2.0 * np.log(powered)
    else:
        lik = -2.0 * (M - m) * N * log_l
    values = lik + penalty
    return values, np.argmin(values, axis=-1)


def aic_penalty(M: int) -> np.ndarray:
    m = np.arange(M)
    return 2.0 * m * (2 * M - m)


def mdl_penalty(M: int, N: int) -> np.ndarray:
    m = np.arange(M)
    return 0.5 * m * (2 * M - m) * math.log(N)


def aic(s, N: int, direct: bool = False) -> CriterionCurve:
    """AIC curve over m = 0..M-1 and its argmin (the estimated emitter count).

    ``direct=True`` evaluates ``L_m ** ((M - m) N)`` literally in double
    precision instead of in the log domain; the curve then contains ``inf``
    wherever that power underflows.
    """
    s = np.asarray(s, dtype=float)
    values, arg = _curve(s, N, aic_penalty(s.shape[-1]), direct)
    return CriterionCurve(values, int(arg))


def mdl(s, N: int, direct: bool = False) -> CriterionCurve:
    """MDL curve: same likelihood term as :func:`aic`, penalty ``m (2M - m) ln(N) / 2``."""
    s = np.asarray(s, dtype=float)
    values, arg = _curve(s, N, mdl_penalty(s.shape[-1], N), direct)
    return CriterionCurve(values, int(arg))


def estimate_counts(spectra, N: int, direct: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (AIC, MDL) argmins for a stack of spectra."""
    spectra = np.atleast_2d(spectra)
    M = spectra.shape[-1]
    _, a = _curve(spectra, N, aic_penalty(M), direct)
    _, d = _curve(spectra, N, mdl_penalty(M, N), direct)
    return a, d
