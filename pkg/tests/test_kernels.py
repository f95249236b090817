"""Closed-form kernel checks against independently computed values.

Expected numbers were produced with a 50-digit arbitrary-precision evaluation
of the defining integrals (series summation for the periodic sums) and are
frozen here.
"""

import math

import numpy as np
import pytest

from spdclum import kernels

TAU = 0.73
SIGMA_015 = kernels.FWHM_TO_SIGMA * 0.15

# exp(-t/tau) (x) gaussian(sigma) for tau=0.73, IRF FWHM 0.15
EMG_SPOTS = {
    -0.2: 0.00082569692975704987,
    0.0: 0.46700733763469709,
    0.1: 0.81483527819640838,
    0.73: 0.36928265491678132,
    2.0: 0.064834399948157706,
}


def test_fwhm_sigma_conversion():
    assert SIGMA_015 == pytest.approx(0.063699135021601428, rel=1e-14)


def test_emg_spot_values():
    for t, expected in EMG_SPOTS.items():
        got = kernels.exp_conv_gauss(t, TAU, SIGMA_015)
        assert got == pytest.approx(expected, rel=1e-12), t


def test_emg_vectorized_matches_scalars():
    ts = np.array(sorted(EMG_SPOTS))
    got = kernels.exp_conv_gauss(ts, TAU, SIGMA_015)
    want = np.array([EMG_SPOTS[t] for t in sorted(EMG_SPOTS)])
    assert np.allclose(got, want, rtol=1e-12)


def test_emg_integral_is_tau():
    # the convolution must preserve the decay's time integral
    hi = kernels.exp_conv_gauss_cdf(1e4, TAU, SIGMA_015)
    lo = kernels.exp_conv_gauss_cdf(-1e4, TAU, SIGMA_015)
    assert hi - lo == pytest.approx(TAU, rel=1e-12)


def test_emg_integral_preserved_across_widths():
    for fwhm in (0.0, 0.05, 0.15, 0.5):
        sigma = kernels.FWHM_TO_SIGMA * fwhm
        mass = (kernels.exp_conv_gauss_cdf(500.0, TAU, sigma)
                - kernels.exp_conv_gauss_cdf(-500.0, TAU, sigma))
        assert mass == pytest.approx(TAU, rel=1e-6)


def test_emg_sigma_zero_is_bare_exponential():
    t = np.array([-1.0, 0.5, 2.0])
    got = kernels.exp_conv_gauss(t, TAU, 0.0)
    want = np.where(t >= 0.0, np.exp(-t / TAU), 0.0)
    assert np.allclose(got, want, rtol=1e-14)


def test_emg_far_negative_underflows_to_zero():
    # deep in the Gaussian's left tail both branches must agree and vanish
    assert kernels.exp_conv_gauss(-30.0, TAU, SIGMA_015) == 0.0
    assert np.isfinite(kernels.exp_conv_gauss(-1e6, 1e6, 1.0))


def test_emg_asymptotic_branch_continuous():
    # just before the far-branch switch the closed form must already agree
    # with the pure-exponential asymptote it switches to
    tau, sigma = 1.0, 0.1
    for z in (-20.0, -22.0, -24.0, -24.9):
        t = sigma * (sigma / tau - z)  # invert z = sigma/tau - t/sigma
        near = kernels.exp_conv_gauss(t, tau, sigma)
        far = math.exp(sigma ** 2 / (2 * tau ** 2) - t / tau)
        assert near == pytest.approx(far, rel=1e-12)
    # far side of the switch stays finite for extreme arguments
    assert np.isfinite(kernels.exp_conv_gauss(1e6, 1e4, 0.1))


def test_gaussian_cdf_matches_erf():
    ts = np.linspace(-3.0, 3.0, 13)
    want = 0.5 * (1.0 + np.vectorize(math.erf)(ts / math.sqrt(2.0)))
    got = kernels.gaussian_cdf(ts, 1.0)
    assert np.allclose(got, want, rtol=1e-14)


def test_gaussian_cdf_sigma_zero_step():
    assert kernels.gaussian_cdf(-1.0, 0.0) == 0.0
    assert kernels.gaussian_cdf(0.0, 0.0) == 0.0
    assert kernels.gaussian_cdf(1e-12, 0.0) == 1.0


def test_periodic_mass_single_period_is_tau():
    period = 1000.0
    mass = kernels.periodic_decay_mass(-period / 2, period / 2, 1850.0,
                                       0.0, period)
    # steady-state: every period collects exactly one pulse's integral
    assert mass == pytest.approx(1850.0, rel=1e-9)


def test_periodic_mass_oracle_values():
    # gate [-5, 5] ns, tau = 0.73 ns, 1 kHz: no pile-up contribution
    frac = kernels.periodic_decay_mass(-5.0, 5.0, 0.73, 0.0, 1e6) / 0.73
    assert frac == pytest.approx(0.99893981840393962, rel=1e-12)
    # same gate, tau = 1850 ns at 100 kHz: pile-up raises the in-gate share
    frac2 = kernels.periodic_decay_mass(-5.0, 5.0, 1850.0, 0.0, 1e4) / 1850.0
    assert frac2 == pytest.approx(0.0027234456335098377, rel=1e-12)
    # and without pile-up the share is smaller
    frac3 = kernels.periodic_decay_mass(-5.0, 5.0, 1850.0, 0.0, 1e9) / 1850.0
    assert frac3 == pytest.approx(0.0026990536898923045, rel=1e-9)
    assert frac2 > frac3


def test_periodic_value_positive_and_periodic():
    tau, sigma, period = 1850.0, SIGMA_015, 1e4
    left = kernels.periodic_decay_value(-period / 2, tau, sigma, period)
    right = kernels.periodic_decay_value(period / 2, tau, sigma, period)
    assert left > 0.0
    assert left == pytest.approx(right, rel=1e-9)


def test_periodic_outside_period_rejected():
    with pytest.raises(ValueError):
        kernels.periodic_decay_value(2e4, 1850.0, 0.0, 1e4)
    with pytest.raises(ValueError):
        kernels.periodic_decay_mass(-2e4, 0.0, 1850.0, 0.0, 1e4)


def _central(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def test_kernel_derivatives_match_finite_differences():
    rng = np.random.default_rng(20240817)
    for _ in range(10):
        tau = float(rng.uniform(0.2, 5.0))
        sigma = float(rng.uniform(0.02, 0.5))
        t = float(rng.uniform(-0.5, 3.0))
        h_tau = 1e-5 * tau
        num = _central(lambda x: kernels.exp_conv_gauss(t, x, sigma),
                       tau, h_tau)
        ana = kernels.exp_conv_gauss_dtau(t, tau, sigma)
        assert ana == pytest.approx(num, rel=1e-4, abs=1e-9)

        h_t = 1e-5 * max(abs(t), 0.1)
        num = _central(lambda x: kernels.exp_conv_gauss(x, tau, sigma),
                       t, h_t)
        ana = kernels.exp_conv_gauss_dt(t, tau, sigma)
        assert ana == pytest.approx(num, rel=1e-4, abs=1e-8)

        h_s = 1e-5 * sigma
        num = _central(lambda x: kernels.exp_conv_gauss(t, tau, x),
                       sigma, h_s)
        ana = kernels.exp_conv_gauss_dsigma(t, tau, sigma)
        assert ana == pytest.approx(num, rel=1e-4, abs=1e-8)


def test_cdf_is_antiderivative():
    ts = np.linspace(-1.0, 5.0, 7)
    h = 1e-6
    for t in ts:
        num = (kernels.exp_conv_gauss_cdf(t + h, TAU, SIGMA_015)
               - kernels.exp_conv_gauss_cdf(t - h, TAU, SIGMA_015)) / (2 * h)
        ana = kernels.exp_conv_gauss(t, TAU, SIGMA_015)
        assert num == pytest.approx(ana, rel=1e-7, abs=1e-12)
