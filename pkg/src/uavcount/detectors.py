"""Eigenvalue threshold detectors: SR-MME, GM, MME and M-MME.

Every statistic takes the spectrum of the sample covariance ``(1/N) Y Y^H``
sorted descending. Decisions follow ``H1 iff statistic > threshold``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .signal_model import draw_spectra
from .tracy_widom import DEFAULT_TABLE, Tw2Table, wishart_params

MIN_CALIBRATION_TRIALS = 100


class DetectorId(str, enum.Enum):
    SR_MME = "SR_MME"
    GM = "GM"
    MME = "MME"
    M_MME = "M_MME"


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"


class UnsupportedRegimeError(ValueError):
    """Analytic threshold requested where its derivation does not apply (N <= M)."""


class InsufficientTrialsError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorVerdict:
    statistic: float
    threshold: float
    decision: Hypothesis
    detector_id: DetectorId


@dataclass(frozen=True)
class TheoreticalCurves:
    p_fa: float
    p_d: float | None = None


def _spectrum(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape[-1] < 1:
        raise ValueError("empty spectrum")
    return s


def _extremes(s):
    # min/max rather than first/last so unsorted input still works
    return np.max(s, axis=-1), np.min(s, axis=-1)


# -- statistics ---------------------------------------------------------------

def sr_mme_statistic(s):
    """Square root of largest times smallest eigenvalue."""
    lmax, lmin = _extremes(_spectrum(s))
    if np.any(lmin < 0):
        raise ValueError("SR-MME needs a non-negative spectrum")
    return np.sqrt(lmax * lmin)


def gm_statistic(s):
    """Geometric mean of the eigenvalues (0 if any eigenvalue is 0)."""
    s = _spectrum(s)
    if np.any(s < 0):
        raise ValueError("GM needs a non-negative spectrum")
    with np.errstate(divide="ignore"):
        return np.exp(np.mean(np.log(s), axis=-1))


def mme_statistic(s):
    """Ratio of largest to smallest eigenvalue."""
    lmax, lmin = _extremes(_spectrum(s))
    if np.any(lmin <= 0):
        raise ValueError("MME is undefined when the smallest eigenvalue is 0")
    return lmax / lmin


def m_mme_statistic(s):
    """Arithmetic mean of largest and smallest eigenvalue."""
    lmax, lmin = _extremes(_spectrum(s))
    return (lmax + lmin) / 2.0


def gm_decision_statistic(s, N: int):
    """GM statistic with the largest-eigenvalue correction used by the GM threshold.

    The GM false-alarm derivation rewrites ``det(Q) > gamma^M`` as
    ``lambda_max(R) > gamma^M lambda_max(R) / det(Q)`` and then replaces the
    right-hand ``lambda_max(R)`` by its Wishart centre ``mu``. The resulting
    test is ``(det(Q) lambda_max(R) / mu)^(1/M) > gamma``; this function
    returns the left-hand side so the comparison against :func:`gm_threshold`
    is exactly that test. With the self-calibrated threshold it reduces to
    ``lambda_max(R) > nu q + mu``.
    """
    s = _spectrum(s)
    M = s.shape[-1]
    mu = wishart_params(M, N).mu
    lmax = np.max(s, axis=-1)
    with np.errstate(divide="ignore"):
        log_det = np.sum(np.log(s), axis=-1)
        return np.exp((log_det + np.log(N * lmax / mu)) / M)


STATISTICS = {
    DetectorId.SR_MME: sr_mme_statistic,
    DetectorId.GM: gm_statistic,
    DetectorId.MME: mme_statistic,
    DetectorId.M_MME: m_mme_statistic,
}


# -- analytic thresholds and curves -------------------------------------------

def sr_mme_threshold(M: int, N: int, p_fa: float, table: Tw2Table = DEFAULT_TABLE) -> float:
    if N <= M:
        raise UnsupportedRegimeError(
            f"analytic SR-MME threshold needs N > M (got M={M}, N={N}); calibrate empirically"
        )
    if not 0 < p_fa < 1:
        raise ValueError("p_fa must be in (0, 1)")
    w = wishart_params(M, N)
    q = table.quantile(1.0 - p_fa)
    return (math.sqrt(N) - math.sqrt(M)) / N * math.sqrt(w.nu * q + w.mu)


def sr_mme_theoretical_pfa(M: int, N: int, gamma1: float, table: Tw2Table = DEFAULT_TABLE) -> float:
    w = wishart_params(M, N)
    edge = N * gamma1 / (math.sqrt(N) - math.sqrt(M))
    return 1.0 - table.cdf((edge ** 2 - w.mu) / w.nu)


def sr_mme_theoretical_pd(
    M: int, N: int, gamma1: float, rho1: float, rhoM: float, table: Tw2Table = DEFAULT_TABLE
) -> float:
    """Detection probability from the min/max eigenvalue approximation under H1.

    Follows the closing expression of the derivation, where ``rho1`` enters
    without the factor N carried by the line before it.
    """
    w = wishart_params(M, N)
    denom = N * rhoM + N - math.sqrt(M * N)
    if denom <= 0:
        raise ValueError("non-positive denominator N rho_M + N - sqrt(MN)")
    arg = ((N * gamma1) ** 2 / denom - rho1 - w.mu) / w.nu
    return float(np.clip(1.0 - table.cdf(arg), 0.0, 1.0))


def gm_threshold(M: int, N: int, p_fa: float, log_det_h0: float, table: Tw2Table = DEFAULT_TABLE) -> float:
    """GM threshold; ``log_det_h0`` is ``ln det`` of the noise-only sample covariance."""
    if not 0 < p_fa < 1:
        raise ValueError("p_fa must be in (0, 1)")
    w = wishart_params(M, N)
    bracket = w.nu * table.quantile(1.0 - p_fa) + w.mu
    if bracket <= 0:
        raise ValueError("p_fa too close to 1: nu*q + mu is not positive")
    return math.exp((math.log(bracket) + log_det_h0 - math.log(w.mu)) / M)


def gm_theoretical_pfa(M: int, N: int, gamma2: float, log_det_h0: float, table: Tw2Table = DEFAULT_TABLE) -> float:
    return gm_theoretical_pd(M, N, gamma2, log_det_h0, table)


def gm_theoretical_pd(M: int, N: int, gamma2: float, log_det_h1: float, table: Tw2Table = DEFAULT_TABLE) -> float:
    """``1 - F2((gamma2^M mu / det - mu) / nu)`` with ``det`` given as a log."""
    w = wishart_params(M, N)
    if gamma2 <= 0:
        scaled = 0.0
    else:
        log_term = M * math.log(gamma2) + math.log(w.mu) - log_det_h1
        scaled = math.exp(min(log_term, 700.0))
    return float(np.clip(1.0 - table.cdf((scaled - w.mu) / w.nu), 0.0, 1.0))


# -- decisions ----------------------------------------------------------------

def decide(detector_id: DetectorId, statistic: float, threshold: float) -> DetectorVerdict:
    detector_id = DetectorId(detector_id)
    decision = Hypothesis.H1 if statistic > threshold else Hypothesis.H0
    return DetectorVerdict(float(statistic), float(threshold), decision, detector_id)


def gm_verdict(
    s,
    N: int,
    p_fa: float,
    log_det_h0: float | None = None,
    table: Tw2Table = DEFAULT_TABLE,
) -> DetectorVerdict:
    """GM decision.

    With ``log_det_h0=None`` (self-calibrated, the default) the threshold uses
    the determinant of the observed covariance itself. Passing a value selects
    fixed calibration, e.g. the mean log-determinant of pure-noise draws from
    :func:`calibrate_gm_log_det`.
    """
    s = _spectrum(s)
    M = s.shape[-1]
    if log_det_h0 is None:
        with np.errstate(divide="ignore"):
            log_det_h0 = float(np.sum(np.log(s)))
    if not math.isfinite(log_det_h0):
        return decide(DetectorId.GM, 0.0, 0.0)
    gamma2 = gm_threshold(M, N, p_fa, log_det_h0, table)
    return decide(DetectorId.GM, float(gm_decision_statistic(s, N)), gamma2)


def sr_mme_verdict(s, N: int, p_fa: float, table: Tw2Table = DEFAULT_TABLE) -> DetectorVerdict:
    s = _spectrum(s)
    return decide(DetectorId.SR_MME, float(sr_mme_statistic(s)), sr_mme_threshold(len(s), N, p_fa, table))


def analytic_decisions(detector_id: DetectorId, spectra: np.ndarray, N: int, p_fa: float,
                       log_det_h0: float | None = None, table: Tw2Table = DEFAULT_TABLE) -> np.ndarray:
    """Vectorised H1 decisions (bool array) for detectors with analytic thresholds."""
    spectra = np.atleast_2d(spectra)
    M = spectra.shape[-1]
    detector_id = DetectorId(detector_id)
    if detector_id is DetectorId.SR_MME:
        return sr_mme_statistic(spectra) > sr_mme_threshold(M, N, p_fa, table)
    if detector_id is DetectorId.GM:
        w = wishart_params(M, N)
        bracket = w.nu * table.quantile(1.0 - p_fa) + w.mu
        with np.errstate(divide="ignore"):
            log_det = np.sum(np.log(spectra), axis=-1)
        ref = log_det if log_det_h0 is None else log_det_h0
        log_stat = (log_det + np.log(N * spectra.max(axis=-1) / w.mu)) / M
        log_thr = (math.log(bracket) + ref - math.log(w.mu)) / M
        # self-calibrated mode collapses to lambda_max(R) > bracket; keep the
        # algebraic form so both modes share one code path
        return np.where(np.isfinite(log_det), log_stat > log_thr, False)
    raise ValueError(f"{detector_id.value} has no analytic threshold; use calibrate_empirical_threshold")


# -- empirical calibration ----------------------------------------------------

def noise_spectra(M: int, N: int, trials: int, seed: int, stream: int = 0) -> np.ndarray:
    """Spectra of ``trials`` pure-noise sample covariances (deterministic in ``seed``)."""
    return draw_spectra(M, N, 0, 0.0, seed, trials, stream=stream)


def empirical_threshold(statistics: np.ndarray, p_fa) -> np.ndarray | float:
    """Upper ``p_fa`` quantile of H0 statistics (``'higher'`` order statistic)."""
    stats = np.asarray(statistics, dtype=float)
    if stats.size < MIN_CALIBRATION_TRIALS:
        raise InsufficientTrialsError(f"need >= {MIN_CALIBRATION_TRIALS} H0 trials, got {stats.size}")
    return np.quantile(stats, 1.0 - np.asarray(p_fa), method="higher")


def calibrate_empirical_threshold(
    detector_id: DetectorId,
    M: int,
    N: int,
    p_fa: float,
    trials: int,
    seed: int,
    spectra: np.ndarray | None = None,
) -> float:
    """Monte Carlo ``(1 - p_fa)`` quantile of a detector statistic under H0.

    ``spectra`` may carry a precomputed H0 bank; otherwise ``trials`` fresh
    draws are made from ``seed``.
    """
    if trials < MIN_CALIBRATION_TRIALS:
        raise InsufficientTrialsError(f"need >= {MIN_CALIBRATION_TRIALS} H0 trials, got {trials}")
    if not 0 < p_fa < 1:
        raise ValueError("p_fa must be in (0, 1)")
    if spectra is None:
        spectra = noise_spectra(M, N, trials, seed)
    stat = STATISTICS[DetectorId(detector_id)](spectra[:trials])
    return float(empirical_threshold(stat, p_fa))


def calibrate_gm_log_det(M: int, N: int, trials: int, seed: int) -> float:
    """Mean ``ln det`` of noise-only sample covariances, for fixed-calibration GM."""
    spectra = noise_spectra(M, N, trials, seed)
    return float(np.mean(np.sum(np.log(spectra), axis=-1)))
