"""Coherent third-order balanced signal between two mutually delayed probes.

The x-polarized leakage of the reference pulse mixes with its own
z-component and the delayed pulse through chi44, producing an x-polarized
field on the delayed probe that the ellipsometer reads as a change in
ellipticity. For transform-limited Gaussian pulses the double spectral
integral over the pulses' spectral intensity autocorrelation reduces to
the time-domain intensity autocorrelation envelope (derivation in
``docs/spectral_autocorrelation.md``), so no spectral quadrature is done
here.

The chi11 term drives a z-polarized intensity modulation only. After the
quarter-wave plate that intensity splits evenly between the two
photodiodes and drops out of the difference, see
:func:`photodiode_currents`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import C_LIGHT, BeamGeometry, ZnTeMaterial, overlap3
from .probes import ProbePair, intensity_autocorrelation_envelope, peak_field
from .traces import SignalTrace, check_uniform


def s3_prefactor(pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry) -> float:
    """chi44 w_p N_tau E_tx E_tz / (n c w0^2): ellipticity per unit detector
    gain at zero delay, before the spatial overlap factor."""
    pt, ptau = pair.pulse_t, pair.pulse_tau
    e_x = peak_field(pt, material, polarization="x") if pt.power_x > 0 else 0.0
    e_z = peak_field(pt, material, polarization="z")
    n = geometry.refractive_index
    return (material.chi44 * ptau.angular_frequency * ptau.photon_number * e_x * e_z
            / (n * C_LIGHT * geometry.waist_w0 ** 2))


def s3_amplitude(pair, material, geometry, k_det):
    """Peak of the S3 bump above the baseline, in volts."""
    return k_det * s3_prefactor(pair, material, geometry) * overlap3(pair.separation, geometry)


def calibrate_k_det(pair, material, geometry, target_pp):
    """Detector gain that makes the S3 peak-to-peak equal ``target_pp``."""
    ref = s3_amplitude(pair, material, geometry, 1.0)
    if ref <= 0:
        raise ValueError("cannot calibrate on a configuration with zero S3 signal")
    return target_pp / ref


def s3_trace(pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry, delays,
             k_det: float, drift=(0.0, 0.0), integration_time_per_point=0.0,
             metadata=None) -> SignalTrace:
    """Noise-free balanced S3 trace ``c + a tau + S0 overlap3 env(tau)``.

    ``drift`` is ``(a, c)`` in V/s and V.
    """
    delays = check_uniform(delays, "delays")
    a, c = drift
    amp = s3_amplitude(pair, material, geometry, k_det)
    values = c + a * delays + amp * intensity_autocorrelation_envelope(pair.pulse_tau, delays)
    meta = {"kind": "s3", "k_det": k_det, "amplitude_V": amp,
            "drift_a_V_per_s": a, "drift_c_V": c}
    meta.update(metadata or {})
    return SignalTrace(delays, values, integration_time_per_point, meta)


def photodiode_currents(intensity, ellipticity):
    """Currents on the two balanced photodiodes after a quarter-wave plate
    and polarizing splitter, for total intensity ``intensity`` and probe
    ellipticity ``ellipticity`` (rad)."""
    s = np.sin(2.0 * np.asarray(ellipticity))
    half = 0.5 * np.asarray(intensity)
    return half * (1.0 + s), half * (1.0 - s)


def balanced_difference(intensity, ellipticity):
    i_plus, i_minus = photodiode_currents(intensity, ellipticity)
    return i_plus - i_minus


# -- lock-in ----------------------------------------------------------------

@dataclass(frozen=True)
class LockinResult:
    amplitude: float
    stderr: float
    n_periods: int


def chopper_reference(n_samples, sample_rate, chop_freq, phase=0.0):
    """Square-wave chopper state (True = open), 50 % duty cycle."""
    t = np.arange(n_samples) / sample_rate
    return ((t * chop_freq + phase) % 1.0) < 0.5


def lockin_demodulate(samples, reference, sample_rate, chop_freq, integration=None):
    """Reference-locked on/off difference of a chopped stream.

    Each full chop period contributes mean(open) - mean(closed); the result
    is the average over periods and its standard error. Constant offsets
    cancel period by period.
    """
    samples = np.asarray(samples, dtype=float)
    reference = np.asarray(reference, dtype=bool)
    if samples.shape != reference.shape:
        raise ValueError("samples and reference must have the same length")
    per_period = sample_rate / chop_freq
    if per_period < 4 or abs(per_period - round(per_period)) > 1e-9 * per_period:
        raise ValueError(
            f"insufficient or non-integer samples per chop period ({per_period:g})")
    per_period = int(round(per_period))
    if integration is not None:
        n_keep = int(round(integration * sample_rate))
        samples, reference = samples[:n_keep], reference[:n_keep]
    n_periods = samples.size // per_period
    if n_periods < 2:
        raise ValueError("integration shorter than two chop periods")
    x = samples[: n_periods * per_period].reshape(n_periods, per_period)
    r = reference[: n_periods * per_period].reshape(n_periods, per_period)
    n_on = r.sum(axis=1)
    n_off = per_period - n_on
    if np.any(n_on == 0) or np.any(n_off == 0):
        raise ValueError("reference does not switch within every chop period")
    diff = (x * r).sum(axis=1) / n_on - (x * ~r).sum(axis=1) / n_off
    stderr = diff.std(ddof=1) / math.sqrt(n_periods)
    return LockinResult(float(diff.mean()), float(stderr), n_periods)
