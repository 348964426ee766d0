import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eocorr.analysis import (gaussian_fit, gaussian_model, normalization_constant,
                             normalize_by_C, peak_to_peak, spectral_fwhm, spectral_peak,
                             windowed_spectrum)
from eocorr.physics import BeamGeometry
from eocorr.probes import ProbePair
from eocorr.traces import CorrelationTrace, GridError, SignalTrace

X = np.linspace(-1e-12, 1e-12, 201)
TRUE = {"a": 3e9, "b": 5e-3, "c": 1e-3, "d": 40e-15, "gamma": 285.7e-15}


def test_exact_model_is_recovered():
    y = gaussian_model(X, **TRUE)
    fit = gaussian_fit((X, y))
    assert fit.converged
    for k, v in TRUE.items():
        assert fit.params[k] == pytest.approx(v, rel=1e-6)


def test_fit_covariance_symmetric_psd():
    rng = np.random.default_rng(0)
    y = gaussian_model(X, **TRUE) + rng.normal(0, 2e-4, X.size)
    fit = gaussian_fit(SignalTrace(X, y))
    assert np.allclose(fit.covariance, fit.covariance.T)
    assert np.linalg.eigvalsh(fit.covariance).min() >= -1e-12 * np.abs(fit.covariance).max()
    assert fit.params["gamma"] > 0
    d = fit.to_dict()
    assert len(d["covariance"]) == 5


def test_fit_reports_non_convergence():
    rng = np.random.default_rng(1)
    y = gaussian_model(X, **TRUE) + rng.normal(0, 1e-3, X.size)
    fit = gaussian_fit((X, y), max_iter=2)
    assert not fit.converged
    assert set(fit.params) == set(TRUE)


def test_fit_needs_points():
    with pytest.raises(ValueError):
        gaussian_fit((X[:5], X[:5]))


@settings(max_examples=25, deadline=None)
@given(st.floats(-200e-15, 200e-15), st.floats(0.2, 20.0))
def test_fit_equivariance(shift, scale):
    y = gaussian_model(X, **TRUE)
    base = gaussian_fit((X, y)).params
    moved = gaussian_fit((X + shift, y)).params
    scaled = gaussian_fit((X, scale * y)).params
    assert moved["d"] == pytest.approx(base["d"] + shift, abs=1e-20)
    assert moved["gamma"] == pytest.approx(base["gamma"], rel=1e-7)
    for k in ("a", "b", "c"):
        assert scaled[k] == pytest.approx(scale * base[k], rel=1e-7)
    assert scaled["d"] == pytest.approx(base["d"], abs=1e-20)
    assert scaled["gamma"] == pytest.approx(base["gamma"], rel=1e-7)


# -- peak-to-peak -------------------------------------------------------------

def test_peak_to_peak_constant_and_bump():
    assert peak_to_peak((X, np.full(X.size, 2.0))) == (0.0, 0.0)
    y = gaussian_model(X, 0.0, 5.0, 0.0, 0.0, 200e-15)
    assert peak_to_peak((X, y))[0] == pytest.approx(5.0, rel=1e-12)


def test_peak_to_peak_with_linear_baseline():
    y = gaussian_model(X, **TRUE)
    pp, ci = peak_to_peak(SignalTrace(X, y), baseline="linear")
    assert pp == pytest.approx(TRUE["b"], rel=1e-6)
    assert ci >= 0


def test_peak_to_peak_interval_from_standard_errors():
    tr = CorrelationTrace(X, np.sin(X * 1e12), 0.0, np.full(X.size, 0.1))
    pp, ci = peak_to_peak(tr)
    assert ci == pytest.approx(2 * math.hypot(0.1, 0.1))


# -- spectra -------------------------------------------------------------------

def test_cosine_on_bin_is_one_bin():
    n, dt = 256, 10e-15
    t = np.arange(n) * dt
    f0 = 16 / (n * dt)
    spec = windowed_spectrum((t, np.cos(2 * math.pi * f0 * t)), window="rect", pad_factor=1)
    k = int(np.argmax(spec.magnitudes))
    assert spec.frequencies[k] == pytest.approx(f0)
    others = np.delete(spec.magnitudes, k)
    assert others.max() < 1e-9 * spec.magnitudes[k]


def test_even_trace_has_real_spectrum():
    y = np.exp(-X ** 2 / (2 * (150e-15) ** 2))
    spec = windowed_spectrum((X, y))
    assert np.max(np.abs(spec.spectrum.imag)) <= 1e-9 * np.abs(spec.spectrum).max()
    assert spec.parseval_residual < 1e-9
    assert spec.window == {"name": "kaiser", "beta": 6.0}
    assert spec.frequencies.size == (4 * X.size) // 2 + 1


def test_power_scale_and_errors():
    y = np.exp(-X ** 2 / (2 * (150e-15) ** 2))
    mag = windowed_spectrum((X, y))
    pw = windowed_spectrum((X, y), scale="power")
    assert np.allclose(pw.magnitudes, mag.magnitudes ** 2)
    with pytest.raises(GridError):
        windowed_spectrum((np.r_[0.0, 1.0, 3.0, 4.0, 5.0], np.ones(5)))
    with pytest.raises(ValueError):
        windowed_spectrum((X, y), window="hann")


def test_peak_and_width_of_gaussian():
    sigma_t = 100e-15
    y = np.exp(-X ** 2 / (2 * sigma_t ** 2))
    spec = windowed_spectrum((X, y), window="rect", pad_factor=8)
    assert spectral_peak(spec) == 0.0
    # transform is a Gaussian with sigma_f = 1 / (2 pi sigma_t)
    sigma_f = 1 / (2 * math.pi * sigma_t)
    assert spectral_fwhm(spec) == pytest.approx(2 * math.sqrt(2 * math.log(2)) * sigma_f, rel=1e-3)


def test_peak_of_band_limited_signal():
    t = np.arange(-1024, 1024) * 10e-15
    y = np.cos(2 * math.pi * 2e12 * t) * np.exp(-t ** 2 / (2 * (2e-12) ** 2))
    spec = windowed_spectrum((t, y))
    assert spectral_peak(spec) == pytest.approx(2e12, rel=2e-3)


# -- normalisation --------------------------------------------------------------

def test_C_against_independent_arithmetic(ref_pair, material, ref_geometry):
    c0 = 299792458.0
    lam, tau_p, w0, P, frep, l = 800e-9, 200e-15, 10e-6, 0.8e-3, 80e6, 1e-3
    lam_um2 = 0.64
    n = math.sqrt(4.27 + 3.01 * lam_um2 / (lam_um2 - 0.142))
    intensity = 2 * (0.94 * P / frep / tau_p) / (math.pi * w0 * w0)
    omega = 2 * math.pi * c0 / lam
    expected = 4.0e-12 * n ** 3 * l * omega * intensity * intensity / c0
    assert normalization_constant(ref_pair, material, ref_geometry) == pytest.approx(expected, rel=1e-12)


def test_C_scalings(ref_pair, material, ref_geometry):
    raw = 123.0
    base = normalize_by_C(raw, ref_pair, material, ref_geometry)
    g2 = BeamGeometry(ref_geometry.waist_w0, ref_geometry.wavelength,
                      ref_geometry.refractive_index, 2 * ref_geometry.crystal_length)
    assert normalize_by_C(raw, ref_pair, material, g2) == pytest.approx(base / 2, rel=1e-14)
    both = ProbePair(ref_pair.pulse_t.scaled(2.0), ref_pair.pulse_tau.scaled(2.0))
    assert normalize_by_C(raw, both, material, ref_geometry) == pytest.approx(base / 4, rel=1e-14)


def test_normalization_is_linear(ref_pair, material, ref_geometry):
    a, b = np.array([1.0, -2.0, 3.5]), np.array([0.5, 7.0, -1.0])
    na = normalize_by_C(a, ref_pair, material, ref_geometry)
    nb = normalize_by_C(b, ref_pair, material, ref_geometry)
    assert np.allclose(normalize_by_C(2 * a + b, ref_pair, material, ref_geometry), 2 * na + nb,
                       rtol=1e-14)


def test_normalized_trace_records_C(ref_pair, material, ref_geometry):
    tr = CorrelationTrace(X, np.ones(X.size), 0.0, np.full(X.size, 0.5))
    out = normalize_by_C(tr, ref_pair, material, ref_geometry)
    C = out.metadata["normalization_C"]
    assert np.allclose(out.values * C, 1.0) and np.allclose(out.se * C, 0.5)


def test_zero_intensity_rejected(ref_pair, material, ref_geometry):
    dark = ProbePair(ref_pair.pulse_t.scaled(0.0), ref_pair.pulse_tau)
    with pytest.raises(ValueError):
        normalize_by_C(1.0, dark, material, ref_geometry)
