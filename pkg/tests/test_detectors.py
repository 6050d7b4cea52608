import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavcount.detectors import (
    DetectorId,
    Hypothesis,
    InsufficientTrialsError,
    UnsupportedRegimeError,
    analytic_decisions,
    calibrate_empirical_threshold,
    decide,
    gm_decision_statistic,
    gm_statistic,
    gm_theoretical_pd,
    gm_theoretical_pfa,
    gm_threshold,
    gm_verdict,
    m_mme_statistic,
    mme_statistic,
    noise_spectra,
    sr_mme_statistic,
    sr_mme_theoretical_pd,
    sr_mme_theoretical_pfa,
    sr_mme_threshold,
    sr_mme_verdict,
)
from uavcount.tracy_widom import wishart_params

spectra = st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=12).map(lambda v: np.sort(v)[::-1])


def test_statistic_examples():
    assert sr_mme_statistic(np.full(5, 2.5)) == pytest.approx(2.5)
    assert sr_mme_statistic([4, 3, 2, 1]) == pytest.approx(2)
    assert sr_mme_statistic([9, 5, 4]) == pytest.approx(6)
    assert gm_statistic([4, 1]) == pytest.approx(2)
    assert gm_statistic(np.full(6, 1.7)) == pytest.approx(1.7)
    assert gm_statistic([8, 4, 2, 1]) == pytest.approx(2.8284, abs=1e-4)
    assert gm_statistic([3, 0]) == 0.0
    assert mme_statistic([4, 1]) == pytest.approx(4)
    assert m_mme_statistic([4, 1]) == pytest.approx(2.5)
    assert mme_statistic(np.full(4, 3.0)) == pytest.approx(1)
    assert m_mme_statistic(np.full(4, 3.0)) == pytest.approx(3)
    assert mme_statistic([9, 3, 1]) == pytest.approx(9)
    assert m_mme_statistic([9, 3, 1]) == pytest.approx(5)
    with pytest.raises(ValueError):
        mme_statistic([2, 0])


@settings(max_examples=200, deadline=None)
@given(spectra, st.floats(0.01, 100))
def test_statistic_properties(s, c):
    gm, mid = gm_statistic(s), m_mme_statistic(s)
    assert s[-1] * (1 - 1e-12) <= gm <= s[0] * (1 + 1e-12)
    assert mid >= math.sqrt(s[0] * s[-1]) * (1 - 1e-12)
    sr = sr_mme_statistic(s)
    assert s[-1] * (1 - 1e-12) <= sr <= s[0] * (1 + 1e-12)
    assert sr_mme_statistic(c * s) == pytest.approx(c * sr, rel=1e-9)
    assert gm_statistic(c * s) == pytest.approx(c * gm, rel=1e-9)
    assert m_mme_statistic(c * s) == pytest.approx(c * mid, rel=1e-9)
    assert mme_statistic(c * s) == pytest.approx(mme_statistic(s), rel=1e-9)


def test_midrange_equals_geometric_mean_when_flat():
    assert m_mme_statistic(np.full(5, 2.0)) == pytest.approx(gm_statistic(np.full(5, 2.0)))
    assert m_mme_statistic([4.0, 1.0]) > gm_statistic([4.0, 1.0])


@pytest.mark.xfail(strict=True, reason="midrange of the extremes can fall below the geometric mean of all eigenvalues")
def test_midrange_dominates_geometric_mean():
    s = [2.0, 2.0, 1.9]
    assert m_mme_statistic(s) >= gm_statistic(s)


def test_sr_mme_threshold_values():
    g = sr_mme_threshold(64, 200, 0.01)
    w = wishart_params(64, 200)
    assert g == pytest.approx((math.sqrt(200) - 8) / 200 * math.sqrt(w.nu * 0.49 + w.mu))
    assert g == pytest.approx(0.6844, abs=1e-4)
    assert sr_mme_threshold(64, 200, 1e-3) > sr_mme_threshold(64, 200, 0.1)
    g4 = sr_mme_threshold(64, 200, 1e-4)
    assert g4 == pytest.approx((math.sqrt(200) - 8) / 200 * math.sqrt(w.nu * 2.06 + w.mu))
    assert sr_mme_theoretical_pfa(64, 200, g4) == pytest.approx(1e-4, rel=1e-9)
    with pytest.raises(UnsupportedRegimeError):
        sr_mme_threshold(64, 64, 0.01)


def test_sr_mme_theoretical_pd():
    g = sr_mme_threshold(64, 200, 1e-4)
    assert sr_mme_theoretical_pd(64, 200, g, 1e9, 0.0) == pytest.approx(1.0)
    assert 0.0 <= sr_mme_theoretical_pd(64, 200, g, 0.0, 0.0) <= 1.0
    # three emitters at -20 dB: rho_1 is about M * 0.01
    assert sr_mme_theoretical_pd(64, 200, g, 0.64, 0.0) >= 0.9
    with pytest.raises(ValueError):
        sr_mme_theoretical_pd(64, 200, g, 1.0, -2.0)


def test_gm_threshold_and_pd():
    M, N = 64, 200
    w = wishart_params(M, N)
    q = 0.49
    # bracket equal to one: (nu q + mu) det / mu = 1
    log_det = math.log(w.mu) - math.log(w.nu * q + w.mu)
    assert gm_threshold(M, N, 0.01, log_det) == pytest.approx(1.0)
    assert gm_threshold(M, N, 1e-4, -5.0) > gm_threshold(M, N, 1e-2, -5.0)
    g2 = gm_threshold(M, N, 1e-4, -7.3)
    assert gm_theoretical_pd(M, N, g2, -7.3) == pytest.approx(1e-4, rel=1e-9)
    assert gm_theoretical_pfa(M, N, g2, -7.3) == pytest.approx(1e-4, rel=1e-9)
    from uavcount.tracy_widom import tw2_cdf
    limit = 1 - tw2_cdf(-w.mu / w.nu)
    assert gm_theoretical_pd(M, N, g2, 1e6) == pytest.approx(limit)
    assert gm_theoretical_pd(M, N, 1e-300, -7.3) == pytest.approx(limit)


def test_gm_self_calibrated_is_largest_eigenvalue_test(rng):
    M, N = 16, 100
    w = wishart_params(M, N)
    bracket = w.nu * 0.49 + w.mu
    s = noise_spectra(M, N, 300, seed=4)
    expected = N * s[:, 0] > bracket
    got = np.array([gm_verdict(x, N, 0.01).decision is Hypothesis.H1 for x in s])
    assert np.array_equal(got, expected)
    assert np.array_equal(analytic_decisions(DetectorId.GM, s, N, 0.01), expected)
    v = gm_verdict(s[0], N, 0.01)
    assert v.statistic == pytest.approx(float(gm_decision_statistic(s[0], N)))


def test_gm_fixed_calibration_mode():
    M, N = 16, 100
    s = noise_spectra(M, N, 200, seed=5)
    ref = float(np.mean(np.sum(np.log(s), axis=1)))
    vec = analytic_decisions(DetectorId.GM, s, N, 0.01, log_det_h0=ref)
    one = [gm_verdict(x, N, 0.01, log_det_h0=ref).decision is Hypothesis.H1 for x in s]
    assert np.array_equal(vec, one)


def test_verdicts_follow_decision_rule():
    v = decide(DetectorId.MME, 2.0, 1.0)
    assert v.decision is Hypothesis.H1
    assert decide("M_MME", 1.0, 1.0).decision is Hypothesis.H0
    v = sr_mme_verdict(np.full(64, 10.0), 200, 0.01)
    assert v.decision is Hypothesis.H1 and v.detector_id is DetectorId.SR_MME
    s = noise_spectra(32, 100, 50, seed=8)
    dec = analytic_decisions(DetectorId.SR_MME, s, 100, 0.05)
    for x, d in zip(s, dec):
        v = sr_mme_verdict(x, 100, 0.05)
        assert (v.decision is Hypothesis.H1) == d == (v.statistic > v.threshold)


def test_empirical_calibration():
    with pytest.raises(InsufficientTrialsError):
        calibrate_empirical_threshold(DetectorId.MME, 8, 40, 0.1, 50, seed=1)
    bank = noise_spectra(8, 40, 2001, seed=2)
    med = calibrate_empirical_threshold(DetectorId.M_MME, 8, 40, 0.5, 2001, seed=2, spectra=bank)
    assert med == pytest.approx(np.median(m_mme_statistic(bank)), rel=1e-3)
    t = [calibrate_empirical_threshold(DetectorId.MME, 8, 40, p, 2001, seed=2, spectra=bank)
         for p in (0.2, 0.1, 0.01)]
    assert t[0] < t[1] < t[2]
    a = calibrate_empirical_threshold(DetectorId.GM, 8, 40, 0.1, 500, seed=3)
    b = calibrate_empirical_threshold(DetectorId.GM, 8, 40, 0.1, 500, seed=3)
    assert a == b


def test_false_alarm_accounting():
    s = noise_spectra(16, 60, 400, seed=9)
    dec = analytic_decisions(DetectorId.SR_MME, s, 60, 0.1)
    fa = int(np.count_nonzero(dec))
    an = int(np.count_nonzero(~dec))
    assert fa + an == 400


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="analytic SR-MME threshold sits ~9% below the empirical 99% point (lambda_min bias)")
def test_sr_mme_empirical_threshold_agrees_with_analytic():
    from uavcount.harness.experiments import noise_bank
    bank = noise_bank(64, 200, 100_000, 0)
    emp = calibrate_empirical_threshold(DetectorId.SR_MME, 64, 200, 0.01, 100_000, seed=0, spectra=bank)
    assert emp == pytest.approx(sr_mme_threshold(64, 200, 0.01), rel=0.05)


@pytest.mark.slow
def test_gm_threshold_false_alarm_rate():
    from uavcount.harness.experiments import noise_bank
    bank = noise_bank(64, 200, 100_000, 0)
    cal = noise_spectra(64, 200, 1, seed=77)[0]
    log_det = float(np.sum(np.log(cal)))
    g2 = gm_threshold(64, 200, 1e-4, log_det)
    assert math.isfinite(g2) and g2 > 0
    fa = np.mean(analytic_decisions(DetectorId.GM, bank, 200, 1e-4))
    # self-calibrated decisions are the lambda_max(R) test
    assert fa <= 10 * 1e-4
