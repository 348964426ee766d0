import math
from dataclasses import replace

import numpy as np
import pytest

from eocorr.analysis import normalization_constant, spectral_fwhm, spectral_peak, windowed_spectrum
from eocorr.kerr import (KerrModelParams, g1_kerr, kerr_amplitude, kerr_coupling,
                         self_coupling, shot_noise_sigma)
from eocorr.montecarlo import DetectionModel, matched_detector_gain
from eocorr.physics import BeamGeometry, DomainError, ThermalEnvironment
from eocorr.probes import ProbePair

TAU = np.arange(-300, 301) * 20e-15


def test_reference_calibration(ref_pair, material, ref_geometry, kerr_params):
    tr = g1_kerr(TAU, 0.0, ref_pair, material, ref_geometry, kerr_params)
    assert np.ptp(tr.values) == pytest.approx(500.0, rel=1e-9)
    assert tr.metadata["params"]["calibration_amplitude"] == 500.0
    assert tr.metadata["params"]["wavelength_exponent"] == pytest.approx(27.38, abs=0.01)
    assert tr.metadata["wavelength_exponent_phenomenological"] is True


def test_vanishes_without_overlap(ref_pair, material, ref_geometry, kerr_params):
    a0 = kerr_amplitude(0.0, ref_pair, material, ref_geometry, kerr_params)
    for dr in (50e-6, 100e-6, 175e-6):
        assert kerr_amplitude(dr, ref_pair, material, ref_geometry, kerr_params) < 1e-4 * a0


def test_power_scaling(ref_pair, material, ref_geometry, kerr_params):
    half = ProbePair(ref_pair.pulse_t.scaled(0.5), ref_pair.pulse_tau.scaled(0.5))
    a = kerr_amplitude(0.0, ref_pair, material, ref_geometry, kerr_params)
    assert kerr_amplitude(0.0, half, material, ref_geometry, kerr_params) == pytest.approx(a / 4, rel=1e-12)


def test_wavelength_factor_of_two(material, kerr_params):
    p = kerr_params.reference_pulse()
    p780 = replace(p, wavelength=780e-9)
    g780 = BeamGeometry.for_material(material, 10e-6, 780e-9, 1e-3)
    g800 = kerr_params.reference_geometry(material)
    a800 = kerr_amplitude(0.0, ProbePair.build(p, p), material, g800, kerr_params)
    a780 = kerr_amplitude(0.0, ProbePair.build(p780, p780), material, g780, kerr_params)
    assert a800 / a780 == pytest.approx(2.0, rel=0.05)


def test_longer_crystal_lowers_normalized_amplitude(ref_pair, material, kerr_params):
    g1 = BeamGeometry.for_material(material, 10e-6, 800e-9, 1e-3)
    g2 = BeamGeometry.for_material(material, 10e-6, 800e-9, 2e-3)
    a1 = kerr_amplitude(0.0, ref_pair, material, g1, kerr_params)
    a2 = kerr_amplitude(0.0, ref_pair, material, g2, kerr_params)
    assert a2 <= 0.7 * a1
    flat = KerrModelParams(responsivity_shape="flat")
    # divergence alone gives a decrease too, though a smaller one
    assert kerr_amplitude(0.0, ref_pair, material, g2, flat) < kerr_amplitude(0.0, ref_pair, material, g1, flat)


def test_temperature_does_not_enter(ref_pair, material, ref_geometry):
    traces = [DetectionModel(ref_pair, material, ref_geometry, ThermalEnvironment(T),
                             include_eo=False).analytic(TAU, 0.0)["kerr"] for T in (4.0, 300.0)]
    assert np.array_equal(traces[0].values, traces[1].values)


def test_spectrum_is_low_pass(ref_pair, material, ref_geometry, kerr_params):
    tr = g1_kerr(TAU, 0.0, ref_pair, material, ref_geometry, kerr_params)
    spec = windowed_spectrum(tr)
    assert spectral_peak(spec) == 0.0
    assert spectral_fwhm(spec) == pytest.approx(3.1e12, abs=0.5e12)


def test_params_validation():
    with pytest.raises(DomainError):
        KerrModelParams(calibration_amplitude=0.0)
    with pytest.raises(ValueError):
        KerrModelParams(responsivity_shape="sinc")


# -- shot noise and coupling -------------------------------------------------

def test_shot_noise_scaling(kerr_params):
    p = kerr_params.reference_pulse()
    assert shot_noise_sigma(p.scaled(4.0)) == pytest.approx(2 * shot_noise_sigma(p))
    assert shot_noise_sigma(p.scaled(1e-30)) < 1e-10 * shot_noise_sigma(p)
    assert shot_noise_sigma(p, gain=3.0) == pytest.approx(3 * shot_noise_sigma(p))


def test_shot_noise_against_poisson_counting(kerr_params):
    p = kerr_params.reference_pulse()
    rng = np.random.default_rng(2718)
    n = p.photon_number
    counts = rng.poisson(n / 2, size=(2, 40000))
    sample = np.std(counts[0] - counts[1], ddof=1)
    assert sample == pytest.approx(shot_noise_sigma(p), rel=0.02)


def test_coupling_zero_without_chi44(ref_pair, material, ref_geometry, kerr_params):
    assert kerr_coupling(ref_pair, replace(material, chi44=0.0), ref_geometry, kerr_params) == 0.0


def test_coupling_scales_with_root_power(ref_pair, material, ref_geometry, kerr_params):
    k = kerr_coupling(ref_pair, material, ref_geometry, kerr_params)
    doubled = ProbePair(ref_pair.pulse_t.scaled(2.0), ref_pair.pulse_tau)
    assert kerr_coupling(doubled, material, ref_geometry, kerr_params) == pytest.approx(
        math.sqrt(2) * k, rel=1e-12)


def test_coupling_vanishes_far_apart(ref_pair, material, ref_geometry, kerr_params):
    far = ref_pair.with_separation(1e-3)
    assert kerr_coupling(far, material, ref_geometry, kerr_params) < 1e-100


def test_coupling_consistent_with_correlation(ref_pair, material, ref_geometry, kerr_params):
    C = normalization_constant(ref_pair, material, ref_geometry)
    gain = matched_detector_gain(ref_pair, material, ref_geometry)
    s_t = shot_noise_sigma(ref_pair.pulse_t, gain)
    s_tau = shot_noise_sigma(ref_pair.pulse_tau, gain)
    k = kerr_coupling(ref_pair, material, ref_geometry, kerr_params)
    g0 = g1_kerr([0.0], 0.0, ref_pair, material, ref_geometry, kerr_params).values[0]
    assert 2 * k * s_t * s_tau / C == pytest.approx(g0, rel=0.01)


def test_coupling_follows_delay_envelope(ref_pair, material, ref_geometry, kerr_params):
    k0 = kerr_coupling(ref_pair, material, ref_geometry, kerr_params)
    gamma = ref_pair.pulse_tau.duration_fwhm / 0.7
    kd = kerr_coupling(ref_pair.with_delay(gamma / 2), material, ref_geometry, kerr_params)
    assert kd == pytest.approx(0.5 * k0, rel=1e-12)


def test_own_vacuum_does_not_couple(kerr_params):
    assert self_coupling(kerr_params.reference_pulse()) == 0.0
