"""Electro-optic field correlation of thermal THz radiation.

The correlation measured by two probes separated by ``delta_r`` and
delayed by ``tau`` is modelled as a cosine transform of a detected
spectral density,

    G(tau, dr) = s * int dW  D(W, dr) cos(W tau),

    D(W, dr) = hbar W / (2 eps0 n^2) * occ(W, T) * n / (c (2 pi)^3)
               * sinc^2(dk(W) l / 2) * exp(-W^2 tau_p^2 / (8 ln 2))
               * 2 pi int_0^K k J0(k dr) exp(-k^2 w0^2 / 4) dk,

where ``n = n_THz(W)``, ``occ`` is ``coth(hbar W / 2 k T)`` (thermal plus
vacuum, symmetrised), ``dk`` the probe/THz velocity mismatch and ``K`` the
largest transverse wavevector that reaches the detection volume. The
blackbody field enters through the crystal facet, which conserves the
transverse wavevector, so by default ``K = W / c`` (``cone_index = 1``).
The Gaussian ``exp(-k^2 w0^2 / 4)`` is the product of both probes' spatial
filters. The integral over ``k`` at zero separation is the mode count of
the detection etendue; dividing it out gives the normalised transverse
factor ``T(W, dr)`` with ``T(W, 0) = 1``.

This is a reconstructed model, not a closed-form result: the absolute
scale carries one global factor ``scale`` (default 1) that is recorded in
trace metadata.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import j0

from .physics import (C_LIGHT, EPS0, HBAR, K_BOLTZMANN, BeamGeometry, DomainError,
                      ThermalEnvironment, ZnTeMaterial, phase_mismatch)
from .probes import ProbePulse
from .traces import CorrelationTrace, check_uniform

OCCUPATIONS = ("full", "thermal", "vacuum")


class QuadratureError(RuntimeError):
    """Grid doubling changed the result by more than the tolerance."""


@dataclass(frozen=True)
class ModeGrid:
    """Quadrature grid over THz angular frequency and transverse wavevector.

    ``k_perp_max`` caps the transverse integral; ``None`` means no cap
    beyond the acceptance cone.
    """

    omega_min: float = 2 * math.pi * 5e9
    omega_max: float = 2 * math.pi * 4e12
    n_omega: int = 512
    k_perp_max: float | None = None
    n_kperp: int = 64

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise DomainError("need 0 < omega_min < omega_max")
        if self.n_omega < 16 or self.n_kperp < 16:
            raise DomainError("grid counts must be at least 16")
        if self.k_perp_max is not None and not self.k_perp_max > 0:
            raise DomainError("k_perp_max must be positive")

    def check_cone(self, cone_index):
        need = self.omega_max * cone_index / C_LIGHT
        if self.k_perp_max is not None and self.k_perp_max < need * (1 - 1e-12):
            raise DomainError(
                f"k_perp_max {self.k_perp_max:.4g} rad/m does not cover the acceptance "
                f"cone at omega_max ({need:.4g} rad/m)")

    def doubled(self) -> "ModeGrid":
        return ModeGrid(self.omega_min, self.omega_max, 2 * self.n_omega,
                        self.k_perp_max, 2 * self.n_kperp)

    def omegas(self):
        return np.linspace(self.omega_min, self.omega_max, self.n_omega)


@dataclass(frozen=True)
class EOModelOptions:
    occupation: str = "full"
    cone_index: float = 1.0
    scale: float = 1.0
    convergence_tol: float = 5e-3

    def __post_init__(self):
        if self.occupation not in OCCUPATIONS:
            raise ValueError(f"occupation must be one of {OCCUPATIONS}")
        if not self.cone_index > 0:
            raise DomainError("cone_index must be positive")


def probe_filter(omega, pulse: ProbePulse):
    """Product of both probes' intensity-envelope transforms."""
    return np.exp(-np.square(omega) * pulse.duration_fwhm ** 2 / (8.0 * math.log(2.0)))


def eo_spectral_response(omega_thz, material: ZnTeMaterial, geometry: BeamGeometry,
                         pulse: ProbePulse):
    """Phase matching times probe filtering, sinc^2(dk l/2) |F(W)|^2, in [0, 1]."""
    dk = phase_mismatch(omega_thz, material, pulse.wavelength)
    # np.sinc(x) = sin(pi x) / (pi x)
    return np.sinc(dk * geometry.crystal_length / (2 * math.pi)) ** 2 * probe_filter(omega_thz, pulse)


def _occupation_factor(omega, env: ThermalEnvironment, mode):
    if mode == "vacuum":
        return np.ones_like(omega)
    x = HBAR * omega / (2.0 * K_BOLTZMANN * env.temperature)
    coth = 1.0 / np.tanh(x)
    return coth if mode == "full" else coth - 1.0


def _transverse(omega, delta_r, geometry, grid, cone_index):
    """2 pi int_0^K k J0(k dr) W(k) dk by the trapezoid rule on k = K u."""
    K = omega * cone_index / C_LIGHT
    if grid.k_perp_max is not None:
        K = np.minimum(K, grid.k_perp_max)
    u = np.linspace(0.0, 1.0, grid.n_kperp)
    k = K[:, None] * u[None, :]
    integrand = k * np.exp(-np.square(k) * geometry.waist_w0 ** 2 / 4.0)
    if delta_r:
        integrand = integrand * j0(k * delta_r)
    return 2 * math.pi * K * np.trapezoid(integrand, u, axis=1)


def detected_spectrum(omega, delta_r, env: ThermalEnvironment, material: ZnTeMaterial,
                      geometry: BeamGeometry, pulse: ProbePulse,
                      grid: ModeGrid = ModeGrid(), options: EOModelOptions = EOModelOptions()):
    """Spectral density D(W, dr) of the correlation, in (V/m)^2 per rad/s."""
    omega = np.asarray(omega, dtype=float)
    if delta_r < 0:
        raise DomainError("delta_r must be non-negative")
    n = material.thz_index(omega)
    field_var = HBAR * omega / (2.0 * EPS0 * n ** 2) * _occupation_factor(omega, env, options.occupation)
    density = n / (C_LIGHT * (2 * math.pi) ** 3)
    etendue = _transverse(omega, delta_r, geometry, grid, options.cone_index)
    response = eo_spectral_response(omega, material, geometry, pulse)
    return options.scale * field_var * density * etendue * response


def transverse_factor(omega, delta_r, geometry, grid=ModeGrid(), cone_index=1.0):
    """Normalised transverse correlation T(W, dr), equal to 1 at dr = 0."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return (_transverse(omega, delta_r, geometry, grid, cone_index)
            / _transverse(omega, 0.0, geometry, grid, cone_index))


def _correlate(tau, delta_r, env, material, geometry, pulse, grid, options):
    omega = grid.omegas()
    dens = detected_spectrum(omega, delta_r, env, material, geometry, pulse, grid, options)
    w = np.full(omega.size, omega[1] - omega[0])
    w[0] = w[-1] = 0.5 * w[0]
    # row-wise reduction: each tau point is summed in the same order no
    # matter how the grid is split (a BLAS product does not promise that)
    return (np.cos(np.outer(tau, omega)) * (dens * w)).sum(axis=1)


def g1_eo(tau_grid, delta_r, env: ThermalEnvironment, material: ZnTeMaterial,
          geometry: BeamGeometry, pulse: ProbePulse, grid: ModeGrid = ModeGrid(),
          options: EOModelOptions = EOModelOptions(), check_convergence=True) -> CorrelationTrace:
    """Thermal EO correlation trace G(tau, delta_r) in V^2/m^2.

    With ``check_convergence`` the integral is repeated on a grid with both
    counts doubled; the finer result is returned and the relative change
    (against the trace maximum) is recorded. A change above
    ``options.convergence_tol`` raises :class:`QuadratureError`.
    """
    tau = check_uniform(tau_grid, "tau grid", min_points=1)
    grid.check_cone(options.cone_index)
    if grid.omega_max > material.thz_domain[1] * (1 + 1e-9):
        raise DomainError("omega_max beyond the THz index table")
    values = _correlate(tau, delta_r, env, material, geometry, pulse, grid, options)
    used = grid
    change = None
    if check_convergence:
        fine = grid.doubled()
        fine_values = _correlate(tau, delta_r, env, material, geometry, pulse, fine, options)
        ref = np.max(np.abs(fine_values))
        change = float(np.max(np.abs(fine_values - values)) / ref) if ref > 0 else 0.0
        if change > options.convergence_tol:
            raise QuadratureError(
                f"g1_eo did not converge: grid doubling changed the trace by "
                f"{change:.3%} (tolerance {options.convergence_tol:.3%})")
        values, used = fine_values, fine
    meta = {
        "kind": "g1_eo",
        "temperature_K": env.temperature,
        "grid": asdict(used),
        "options": asdict(options),
        "scale_factor": options.scale,
        "material_digest": material.digest(),
        "convergence_rel_change": change,
    }
    return CorrelationTrace(tau, values, delta_r, None, meta)
