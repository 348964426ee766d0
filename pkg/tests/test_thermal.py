import math
from dataclasses import replace

import numpy as np
import pytest

from eocorr.analysis import spectral_peak, windowed_spectrum
from eocorr.physics import BeamGeometry, DomainError, ThermalEnvironment
from eocorr.probes import ProbePulse
from eocorr.thermal import (EOModelOptions, ModeGrid, QuadratureError, detected_spectrum,
                            eo_spectral_response, g1_eo, transverse_factor)

TAU = np.arange(-300, 301) * 20e-15
ENV = ThermalEnvironment(300.0)
PULSE = ProbePulse(800e-9, 200e-15, 10e-6, 0.8e-3)


@pytest.fixture(scope="module")
def geom(material):
    return BeamGeometry.for_material(material, 10e-6, 800e-9, 1e-3)


@pytest.fixture(scope="module")
def traces(material, geom):
    return {dr: g1_eo(TAU, dr, ENV, material, geom, PULSE)
            for dr in (0.0, 25e-6, 50e-6, 100e-6, 175e-6, 200e-6)}


def test_trace_is_even_and_positive_at_zero(traces):
    v = traces[0.0].values
    assert v[300] > 0
    assert np.allclose(v, v[::-1], rtol=0, atol=1e-12 * v.max())


def test_spectrum_real_and_non_negative_at_zero_separation(traces):
    spec = windowed_spectrum(traces[0.0], window="rect", pad_factor=1)
    peak = np.abs(spec.spectrum).max()
    assert np.max(np.abs(spec.spectrum.imag)) < 1e-9 * peak
    # the rectangular window leaks a little; the windowed one is clean
    kspec = windowed_spectrum(traces[0.0])
    assert kspec.spectrum.real.min() > -1e-6 * np.abs(kspec.spectrum).max()


def test_amplitude_decays_with_separation(traces):
    pp = [np.ptp(traces[dr].values) for dr in sorted(traces)]
    assert all(b <= a for a, b in zip(pp, pp[1:]))


def test_spectral_peak_redshifts_with_separation(traces):
    peaks = [spectral_peak(windowed_spectrum(traces[dr])) for dr in sorted(traces)]
    assert all(b <= a for a, b in zip(peaks, peaks[1:]))


def test_convergence_recorded(traces):
    for tr in traces.values():
        assert tr.metadata["convergence_rel_change"] < 5e-3
        assert tr.metadata["scale_factor"] == 1.0
        assert "material_digest" in tr.metadata


def test_non_convergence_is_reported(material, geom):
    coarse = ModeGrid(n_omega=16, n_kperp=16)
    with pytest.raises(QuadratureError):
        g1_eo(TAU, 0.0, ENV, material, geom, PULSE, coarse, EOModelOptions(convergence_tol=1e-9))


def test_scale_factor_is_linear(material, geom):
    a = g1_eo(TAU[::10], 0.0, ENV, material, geom, PULSE)
    b = g1_eo(TAU[::10], 0.0, ENV, material, geom, PULSE, options=EOModelOptions(scale=2.5))
    assert np.allclose(b.values, 2.5 * a.values, rtol=1e-13)


def test_vacuum_only_branch_is_positive(material, geom):
    vac = g1_eo(np.zeros(1), 0.0, ENV, material, geom, PULSE,
                options=EOModelOptions(occupation="vacuum"))
    full = g1_eo(np.zeros(1), 0.0, ENV, material, geom, PULSE)
    assert 0 < vac.values[0] < full.values[0]


def test_occupation_split_adds_up(material, geom):
    om = np.linspace(2 * math.pi * 0.1e12, 2 * math.pi * 3e12, 50)
    parts = [detected_spectrum(om, 0.0, ENV, material, geom, PULSE,
                               options=EOModelOptions(occupation=o))
             for o in ("full", "thermal", "vacuum")]
    # coth = 1 + 2 n: the "thermal" branch carries 2 n
    assert np.allclose(parts[0], parts[1] + parts[2], rtol=1e-12)


def test_cold_environment_approaches_vacuum(material, geom):
    cold = g1_eo(np.zeros(1), 0.0, ThermalEnvironment(1.0), material, geom, PULSE)
    vac = g1_eo(np.zeros(1), 0.0, ENV, material, geom, PULSE,
                options=EOModelOptions(occupation="vacuum"))
    assert cold.values[0] == pytest.approx(vac.values[0], rel=1e-6)


def test_response_at_zero_frequency(material, geom):
    assert eo_spectral_response(0.0, material, geom, PULSE) == pytest.approx(1.0)
    om = np.linspace(0, 2 * math.pi * 4e12, 200)
    r = eo_spectral_response(om, material, geom, PULSE)
    assert np.all((r >= 0) & (r <= 1))


def test_first_zero_halves_when_length_doubles(material):
    # with a flat THz index the mismatch is linear in frequency
    flat = replace(material, thz_table=tuple((f, 3.0) for f, _ in material.thz_table))
    n_g = flat.group_index(800e-9)
    pulse = PULSE
    om = np.linspace(2 * math.pi * 0.01e12, 2 * math.pi * 4e12, 400001)

    def first_zero(length):
        g = BeamGeometry.for_material(flat, 10e-6, 800e-9, length)
        r = eo_spectral_response(om, flat, g, pulse)
        k = np.argmax(np.diff(np.sign(np.diff(r))) > 0) + 1
        return om[k]

    expected = 2 * math.pi * 299792458.0 / (abs(n_g - 3.0) * 1e-3)
    z1, z2 = first_zero(1e-3), first_zero(2e-3)
    assert z1 == pytest.approx(expected, rel=1e-3)
    assert z2 == pytest.approx(z1 / 2, rel=1e-3)


def test_detected_spectrum_peaks_near_two_thz(material, geom):
    om = np.linspace(2 * math.pi * 0.05e12, 2 * math.pi * 4e12, 4000)
    d = detected_spectrum(om, 0.0, ENV, material, geom, PULSE)
    f_peak = om[np.argmax(d)] / (2 * math.pi)
    assert 1.5e12 <= f_peak <= 2.5e12


def test_transverse_factor_normalised(geom):
    om = np.linspace(2 * math.pi * 0.1e12, 2 * math.pi * 4e12, 20)
    assert np.allclose(transverse_factor(om, 0.0, geom), 1.0)
    t = transverse_factor(om, 100e-6, geom)
    assert np.all(np.abs(t) <= 1.0 + 1e-12)


def test_grid_invariants():
    with pytest.raises(DomainError):
        ModeGrid(omega_min=0.0)
    with pytest.raises(DomainError):
        ModeGrid(n_omega=8)
    grid = ModeGrid(k_perp_max=1e3)
    with pytest.raises(DomainError):
        grid.check_cone(1.0)
    ModeGrid(k_perp_max=1e6).check_cone(1.0)


def test_grid_beyond_index_table_rejected(material, geom):
    with pytest.raises(DomainError):
        g1_eo(TAU, 0.0, ENV, material, geom, PULSE, ModeGrid(omega_max=2 * math.pi * 6e12))


def test_negative_separation_rejected(material, geom):
    with pytest.raises(DomainError):
        g1_eo(TAU, -1e-6, ENV, material, geom, PULSE)


def test_chunked_evaluation_is_bit_identical(material, geom):
    whole = g1_eo(TAU, 50e-6, ENV, material, geom, PULSE).values
    left = g1_eo(TAU[:301], 50e-6, ENV, material, geom, PULSE).values
    right = g1_eo(TAU[301:], 50e-6, ENV, material, geom, PULSE).values
    assert np.array_equal(whole, np.r_[left, right])
