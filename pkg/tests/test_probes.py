import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eocorr.physics import DomainError
from eocorr.probes import (ProbePair, ProbePulse, autocorrelation_fwhm,
                           intensity_autocorrelation_envelope, peak_field)


def test_photon_number_by_hand():
    p = ProbePulse(800e-9, 200e-15, 10e-6, 0.8e-3)
    e_ph = 6.62607015e-34 * 299792458.0 / 800e-9
    assert p.photon_number == pytest.approx(0.8e-3 / 80e6 / e_ph, rel=1e-14)
    assert p.photon_number == pytest.approx(4.03e7, rel=1e-2)


def test_peak_field_reference_values(material):
    p = ProbePulse(800e-9, 200e-15, 10e-6, 0.8e-3)
    # 10 MV/m order of magnitude at the reference settings
    assert 5e6 < peak_field(p, material) < 20e6
    assert peak_field(p, convention="vacuum") == pytest.approx(
        peak_field(p, material) * math.sqrt(material.nir_index(800e-9)))


def test_peak_field_scales_as_root_power(material):
    p = ProbePulse(800e-9, 200e-15, 10e-6, 0.8e-3)
    assert peak_field(p.scaled(4.0), material) == pytest.approx(2 * peak_field(p, material))


def test_peak_field_unknown_convention(material):
    with pytest.raises(ValueError):
        peak_field(ProbePulse(800e-9, 200e-15, 10e-6, 1e-3), material, convention="nope")


def test_invalid_pulses():
    with pytest.raises(DomainError):
        ProbePulse(800e-9, 0.0, 10e-6, 1e-3)
    with pytest.raises(DomainError):
        ProbePulse(800e-9, 200e-15, 10e-6, -1e-3)
    with pytest.warns(UserWarning):
        ProbePulse(800e-9, 200e-15, 10e-6, 1e-3, power_x=2e-3)


def test_envelope_fwhm():
    p = ProbePulse(800e-9, 200e-15, 10e-6, 1e-3)
    gamma = autocorrelation_fwhm(p)
    assert gamma == pytest.approx(200e-15 / 0.7)
    assert intensity_autocorrelation_envelope(p, gamma / 2) == pytest.approx(0.5)
    assert intensity_autocorrelation_envelope(p, 0.0) == 1.0


@given(st.floats(0, 50e-6), st.floats(-2e-12, 2e-12))
def test_pair_delay_and_separation_consistent(sep, delay):
    p = ProbePulse(800e-9, 200e-15, 10e-6, 1e-3)
    pair = ProbePair.build(p, p, delay, sep)
    assert pair.separation == pytest.approx(sep, abs=1e-18)
    assert pair.relative_delay == pytest.approx(delay, abs=1e-27)
    assert pair.with_delay(0.0).relative_delay == 0.0
    assert pair.with_separation(0.0).separation == 0.0


def test_pair_rejects_negative_separation():
    p = ProbePulse(800e-9, 200e-15, 10e-6, 1e-3)
    with pytest.raises(DomainError):
        ProbePair.build(p, p, 0.0, -1e-6)
