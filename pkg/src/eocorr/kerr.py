"""Vacuum-assisted Kerr correlation between the two probes.

Each probe's NIR vacuum fluctuations, the same ones that set its shot
noise, four-wave-mix with both probe fields and imprint a copy of that
noise on the other probe's ellipticity. The copy is correlated with the
shot noise of the originating probe, so the pair correlation picks up a
term that needs the probes to overlap in space and time and that does not
depend on the THz temperature.

The absolute amplitude is anchored once (``calibration_amplitude`` at the
reference configuration); every other configuration is predicted from
the computed scalings:

* probe powers: proportional to P_t * P_tau,
* wavelength: (lambda / lambda_ref) ** p, with ``p`` phenomenological,
* separation and crystal length: the length-integrated third-order
  overlap divided by the crystal length (the 1/l carried by C),
* delay: the probes' intensity cross-correlation envelope.

With ``responsivity_shape="phase_matched"`` the length integral also
carries a Gaussian coherence weight of length ``coherence_length``. This
stands in for the phase-matching response of the vacuum modes and makes
the raw response saturate for crystals longer than that length.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .analysis import eo_ellipticity_gain
from .physics import BeamGeometry, DomainError, ZnTeMaterial, overlap_length
from .probes import ProbePair, ProbePulse, intensity_autocorrelation_envelope, peak_field
from .traces import CorrelationTrace, check_uniform

RESPONSIVITY_SHAPES = ("flat", "phase_matched")
# factor-2 amplitude change between 800 nm and 780 nm probes
DEFAULT_WAVELENGTH_EXPONENT = math.log(2.0) / math.log(800.0 / 780.0)


@dataclass(frozen=True)
class KerrModelParams:
    calibration_amplitude: float = 500.0
    reference_wavelength: float = 800e-9
    reference_waist: float = 10e-6
    reference_duration: float = 200e-15
    reference_power: float = 0.8e-3
    reference_length: float = 1e-3
    reference_rep_rate: float = 80e6
    reference_chi44: float = 1.5e-19
    responsivity_shape: str = "phase_matched"
    wavelength_exponent: float = DEFAULT_WAVELENGTH_EXPONENT
    coherence_length: float = 0.25e-3

    def __post_init__(self):
        if not self.calibration_amplitude > 0:
            raise DomainError("calibration_amplitude must be positive")
        if self.responsivity_shape not in RESPONSIVITY_SHAPES:
            raise ValueError(f"responsivity_shape must be one of {RESPONSIVITY_SHAPES}")
        if not self.coherence_length > 0:
            raise DomainError("coherence_length must be positive")

    def reference_pulse(self) -> ProbePulse:
        return ProbePulse(self.reference_wavelength, self.reference_duration,
                          self.reference_waist, self.reference_power,
                          rep_rate=self.reference_rep_rate)

    def reference_pair(self) -> ProbePair:
        p = self.reference_pulse()
        return ProbePair.build(p, p)

    def reference_geometry(self, material: ZnTeMaterial) -> BeamGeometry:
        return BeamGeometry.for_material(material, self.reference_waist,
                                         self.reference_wavelength, self.reference_length)


def length_factor(delta_r, geometry: BeamGeometry, params: KerrModelParams):
    """Overlap integrated along the crystal, divided by its length."""
    lc = params.coherence_length if params.responsivity_shape == "phase_matched" else None
    return overlap_length(delta_r, geometry, lc) / geometry.crystal_length


def kerr_amplitude(delta_r, pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry,
                   params: KerrModelParams = KerrModelParams()):
    """Zero-delay Kerr correlation in V^2/m^2."""
    ref_geom = params.reference_geometry(material)
    power = pair.pulse_t.power_z * pair.pulse_tau.power_z / params.reference_power ** 2
    lam = (pair.pulse_tau.wavelength / params.reference_wavelength) ** params.wavelength_exponent
    spatial = length_factor(delta_r, geometry, params) / length_factor(0.0, ref_geom, params)
    return params.calibration_amplitude * power * lam * spatial


def g1_kerr(tau_grid, delta_r, pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry,
            params: KerrModelParams = KerrModelParams()) -> CorrelationTrace:
    """Kerr correlation trace in V^2/m^2; temperature does not enter."""
    tau = check_uniform(tau_grid, "tau grid", min_points=1)
    amp = kerr_amplitude(delta_r, pair, material, geometry, params)
    values = amp * intensity_autocorrelation_envelope(pair.pulse_tau, tau)
    meta = {"kind": "g1_kerr", "params": asdict(params), "amplitude": float(amp),
            "calibration": f"A_K = {params.calibration_amplitude:g} V^2/m^2 at the "
                           f"reference configuration (single-point anchor)",
            "wavelength_exponent_phenomenological": True}
    return CorrelationTrace(tau, values, delta_r, None, meta)


def shot_noise_sigma(pulse: ProbePulse, gain: float = 1.0) -> float:
    """Per-pulse standard deviation of the balanced readout, gain * sqrt(N).

    The two photodiodes each count a Poisson number of photoelectrons with
    mean N/2, so their difference has variance N.
    """
    return gain * math.sqrt(pulse.photon_number)


def _coupling_scale(params: KerrModelParams, material: ZnTeMaterial) -> float:
    """Constant that ties the coupling to the calibrated amplitude.

    At the reference configuration the Kerr term seen through the
    detection chain, 2 kappa sigma_t sigma_tau / C, must equal A_K. With the
    detector gain matched to C that reduces to
    kappa_ref = 2 A_K sqrt(N_t N_tau) a^2, ``a`` the ellipticity per field.
    """
    pair = params.reference_pair()
    geom = params.reference_geometry(material)
    a = eo_ellipticity_gain(pair.pulse_tau, material, geom)
    n = pair.pulse_t.photon_number
    kappa_ref = 2.0 * params.calibration_amplitude * n * a ** 2
    e_ref = peak_field(pair.pulse_t, material)
    return kappa_ref / (params.reference_chi44 * e_ref * length_factor(0.0, geom, params))


def kerr_coupling(pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry,
                  params: KerrModelParams = KerrModelParams(), source: str = "t") -> float:
    """Fraction of the ``source`` probe's shot-noise amplitude that appears
    on the other probe's readout.

    Proportional to chi44, to the peak field of the source probe, to the
    overlap factor at the pair's separation and to the temporal overlap at
    the pair's delay.
    """
    if source not in ("t", "tau"):
        raise ValueError("source must be 't' or 'tau'")
    src = pair.pulse_t if source == "t" else pair.pulse_tau
    lam = (src.wavelength / params.reference_wavelength) ** params.wavelength_exponent
    env = float(intensity_autocorrelation_envelope(src, pair.relative_delay))
    return (_coupling_scale(params, material) * material.chi44 * peak_field(src, material)
            * length_factor(pair.separation, geometry, params) * env * lam)


def self_coupling(pulse: ProbePulse) -> float:
    """Kerr imprint of a probe's own vacuum on its own readout.

    Identically zero: the mixed field would need a wavevector that the
    probe's own phase-matched detection mode does not contain.
    """
    return 0.0
