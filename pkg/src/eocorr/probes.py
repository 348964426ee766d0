"""Femtosecond sampling probes: photon numbers, peak fields and temporal
envelopes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .physics import C_LIGHT, EPS0, H_PLANCK, DomainError, ZnTeMaterial, default_material

# peak power of a Gaussian pulse = 0.94 * energy / FWHM
GAUSSIAN_PEAK_FACTOR = 0.94
# tau_p = 0.7 * gamma, gamma the FWHM of the intensity autocorrelation
DECONVOLUTION_FACTOR = 0.7


@dataclass(frozen=True)
class ProbePulse:
    """One sampling beam. Powers are time averages at the crystal facet."""

    wavelength: float
    duration_fwhm: float
    waist_w0: float
    power_z: float
    power_x: float = 0.0
    rep_rate: float = 80e6
    delay: float = 0.0
    transverse_offset: float = 0.0

    def __post_init__(self):
        if not (self.duration_fwhm > 0 and self.waist_w0 > 0 and self.rep_rate > 0):
            raise DomainError("duration_fwhm, waist_w0 and rep_rate must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if self.power_z < 0 or self.power_x < 0:
            raise DomainError("powers must be non-negative")
        if self.power_x > self.power_z:
            warnings.warn(
                f"x-polarized leakage ({self.power_x} W) exceeds the main "
                f"z-polarized power ({self.power_z} W)", stacklevel=3)

    @property
    def photon_energy(self) -> float:
        return H_PLANCK * C_LIGHT / self.wavelength

    @property
    def photon_number(self) -> float:
        """Photons per pulse in the z-polarized component."""
        return self.power_z / (self.photon_energy * self.rep_rate)

    @property
    def angular_frequency(self) -> float:
        return 2 * math.pi * C_LIGHT / self.wavelength

    def peak_power(self, polarization: str = "z") -> float:
        power = self.power_z if polarization == "z" else self.power_x
        return GAUSSIAN_PEAK_FACTOR * (power / self.rep_rate) / self.duration_fwhm

    def peak_intensity(self, polarization: str = "z") -> float:
        """On-axis peak intensity at the focus (W/m^2)."""
        return 2.0 * self.peak_power(polarization) / (math.pi * self.waist_w0 ** 2)

    def scaled(self, factor: float) -> "ProbePulse":
        """Copy with both polarization components scaled (fixed extinction)."""
        return replace(self, power_z=self.power_z * factor, power_x=self.power_x * factor)


def peak_field(pulse: ProbePulse, material: ZnTeMaterial | None = None,
               convention: str = "crystal", polarization: str = "z") -> float:
    """Peak electric-field amplitude of ``pulse`` in V/m.

    ``convention="crystal"`` uses the NIR index of ``material`` in
    E = sqrt(2 I / (c eps0 n)); ``"vacuum"`` sets n = 1.
    """
    if convention == "crystal":
        material = material or default_material()
        n = float(material.nir_index(pulse.wavelength))
    elif convention == "vacuum":
        n = 1.0
    else:
        raise ValueError(f"unknown field convention {convention!r}")
    intensity = pulse.peak_intensity(polarization)
    return math.sqrt(2.0 * intensity / (C_LIGHT * EPS0 * n))


def autocorrelation_fwhm(pulse: ProbePulse) -> float:
    return pulse.duration_fwhm / DECONVOLUTION_FACTOR


def intensity_autocorrelation_envelope(pulse: ProbePulse, tau):
    """Normalised intensity autocorrelation exp(-4 ln2 tau^2 / gamma^2)."""
    gamma = autocorrelation_fwhm(pulse)
    return np.exp(-4.0 * math.log(2.0) * np.square(tau) / gamma ** 2)


@dataclass(frozen=True)
class ProbePair:
    """The reference pulse ``t`` and the delayed, displaced pulse ``t + tau``.

    Delay and separation are derived from the pulses' own ``delay`` and
    ``transverse_offset`` fields so the two descriptions cannot disagree.
    """

    pulse_t: ProbePulse
    pulse_tau: ProbePulse

    @classmethod
    def build(cls, pulse_t: ProbePulse, pulse_tau: ProbePulse,
              delay: float = 0.0, separation: float = 0.0) -> "ProbePair":
        if separation < 0:
            raise DomainError("separation must be non-negative")
        return cls(replace(pulse_t, delay=0.0, transverse_offset=-separation / 2),
                   replace(pulse_tau, delay=delay, transverse_offset=separation / 2))

    @property
    def relative_delay(self) -> float:
        return self.pulse_tau.delay - self.pulse_t.delay

    @property
    def separation(self) -> float:
        return abs(self.pulse_t.transverse_offset - self.pulse_tau.transverse_offset)

    def with_delay(self, delay: float) -> "ProbePair":
        return replace(self, pulse_tau=replace(self.pulse_tau, delay=self.pulse_t.delay + delay))

    def with_separation(self, separation: float) -> "ProbePair":
        return ProbePair.build(self.pulse_t, self.pulse_tau, self.relative_delay, separation)

    def swapped(self) -> "ProbePair":
        return ProbePair(self.pulse_tau, self.pulse_t)
