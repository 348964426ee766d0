"""Physical constants, crystal material model, thermal occupation and
Gaussian-beam geometry shared by the signal generators.

Amplitude convention
--------------------
Every spatial overlap in this package uses the *field amplitude* profile

    g(r, y) = (w0 / w(y)) * exp(-|r|^2 / w(y)^2),

not the intensity profile. The third-order overlap integrand is
``g(r - dr/2)**2 * g(r + dr/2)``. Completing the square gives the closed form

    int d^2r g^2 g = (pi w0^2 / 3) * (w0 / w) * exp(-2 dr^2 / (3 w^2)),

so at the focus a separation equal to the waist leaves exp(-2/3) of the
signal. Mixing up amplitude and intensity here changes the exponent by a
factor of two.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants as _sc
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

C_LIGHT = _sc.c
H_PLANCK = _sc.h
HBAR = _sc.hbar
K_BOLTZMANN = _sc.k
EPS0 = _sc.epsilon_0

MATERIAL_SCHEMA = "eocorr-material/1"
MATERIAL_PATH_ENV = "EOCORR_MATERIAL_PATH"


class DomainError(ValueError):
    """Argument outside the domain where a model is defined."""


class MaterialFileError(ValueError):
    """Malformed or unsupported material file."""


@dataclass(frozen=True)
class ZnTeMaterial:
    """Nonlinear crystal parameters and dispersion models.

    Refractive indices are configuration, loaded from a material file
    (see :func:`load_material`). The NIR index follows a one-term
    Sellmeier form ``n^2 = a + b lam^2 / (lam^2 - c)`` with ``lam`` in
    micrometres; the THz index is a cubic spline through a table of
    ``(frequency_THz, n)`` rows.
    """

    chi11: float = 3.0e-19
    chi44: float = 1.5e-19
    r41: float = 4.0e-12
    sellmeier: tuple[float, float, float] = (4.27, 3.01, 0.142)
    nir_domain_um: tuple[float, float] = (0.70, 0.90)
    thz_table: tuple[tuple[float, float], ...] = ()
    name: str = "ZnTe"

    def __post_init__(self):
        for key in ("chi11", "chi44", "r41"):
            if not getattr(self, key) >= 0:
                raise DomainError(f"{key} must be non-negative, got {getattr(self, key)}")
        lo, hi = self.nir_domain_um
        if not 0 < lo < hi:
            raise DomainError(f"invalid NIR domain {self.nir_domain_um}")
        if len(self.thz_table) < 4:
            raise DomainError("THz index table needs at least 4 rows")
        freqs = [row[0] for row in self.thz_table]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise DomainError("THz table frequencies must be strictly increasing")
        if any(row[1] <= 1 for row in self.thz_table):
            raise DomainError("THz index must exceed 1")

    # -- NIR ---------------------------------------------------------------
    def _check_nir(self, wavelength):
        lam_um = np.asarray(wavelength, dtype=float) * 1e6
        lo, hi = self.nir_domain_um
        if np.any(lam_um < lo - 1e-12) or np.any(lam_um > hi + 1e-12):
            raise DomainError(
                f"wavelength {wavelength!r} m outside NIR model domain {lo}-{hi} um")
        return lam_um

    def nir_index(self, wavelength):
        """Phase index at vacuum wavelength ``wavelength`` (m)."""
        lam_um = self._check_nir(wavelength)
        a, b, c = self.sellmeier
        lam2 = lam_um ** 2
        return np.sqrt(a + b * lam2 / (lam2 - c))

    def group_index(self, wavelength):
        """Group index n - lam dn/dlam, from the analytic Sellmeier derivative."""
        lam_um = self._check_nir(wavelength)
        a, b, c = self.sellmeier
        lam2 = lam_um ** 2
        n = np.sqrt(a + b * lam2 / (lam2 - c))
        dn2 = -2.0 * b * c * lam_um / (lam2 - c) ** 2
        return n - lam_um * dn2 / (2.0 * n)

    # -- THz ---------------------------------------------------------------
    @cached_property
    def _thz_spline(self):
        table = np.asarray(self.thz_table, dtype=float)
        return CubicSpline(table[:, 0] * 1e12 * 2 * np.pi, table[:, 1])

    @property
    def thz_domain(self) -> tuple[float, float]:
        """Angular-frequency domain (rad/s) of the THz index model."""
        return (2 * np.pi * 1e12 * self.thz_table[0][0],
                2 * np.pi * 1e12 * self.thz_table[-1][0])

    def thz_index(self, omega):
        """THz index at angular frequency ``omega`` (rad/s)."""
        om = np.asarray(omega, dtype=float)
        lo, hi = self.thz_domain
        tol = 1e-9 * hi
        if np.any(om < lo - tol) or np.any(om > hi + tol):
            raise DomainError(
                f"THz frequency outside index table domain "
                f"[{lo / 2e12 / np.pi:g}, {hi / 2e12 / np.pi:g}] THz")
        return self._thz_spline(np.clip(om, lo, hi))

    def digest(self) -> str:
        return hashlib.sha256(dumps_material(self).encode()).hexdigest()[:16]


# -- material file I/O ------------------------------------------------------

def _parse_floats(text, key, lineno):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise MaterialFileError(f"line {lineno}: bad numeric value for {key!r}: {text!r}")


def parse_material(text: str) -> ZnTeMaterial:
    """Parse the flat ``key = value`` material format.

    The first non-comment line must declare ``schema = eocorr-material/1``.
    ``thz_index`` may repeat; each occurrence is one table row.
    """
    kw = {}
    table = []
    schema_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MaterialFileError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not schema_seen:
            if key != "schema":
                raise MaterialFileError(f"line {lineno}: schema header must come first")
            if value != MATERIAL_SCHEMA:
                raise MaterialFileError(f"unsupported material schema {value!r}")
            schema_seen = True
            continue
        if key == "name":
            kw["name"] = value
        elif key in ("chi11", "chi44", "r41"):
            kw[key] = _parse_floats(value, key, lineno)[0]
        elif key in ("sellmeier_a", "sellmeier_b", "sellmeier_c"):
            kw[key] = _parse_floats(value, key, lineno)[0]
        elif key == "nir_domain_um":
            vals = _parse_floats(value, key, lineno)
            if len(vals) != 2:
                raise MaterialFileError(f"line {lineno}: nir_domain_um needs two values")
            kw[key] = tuple(vals)
        elif key == "thz_index":
            vals = _parse_floats(value, key, lineno)
            if len(vals) != 2:
                raise MaterialFileError(f"line {lineno}: thz_index row needs frequency_THz, n")
            table.append(tuple(vals))
        else:
            raise MaterialFileError(f"line {lineno}: unknown key {key!r}")
    if not schema_seen:
        raise MaterialFileError("missing schema header")
    try:
        sellmeier = (kw.pop("sellmeier_a"), kw.pop("sellmeier_b"), kw.pop("sellmeier_c"))
    except KeyError as exc:
        raise MaterialFileError(f"missing Sellmeier coefficient {exc}") from None
    try:
        return ZnTeMaterial(sellmeier=sellmeier, thz_table=tuple(table), **kw)
    except DomainError as exc:
        raise MaterialFileError(str(exc)) from None


def dumps_material(material: ZnTeMaterial) -> str:
    a, b, c = material.sellmeier
    lines = [
        f"schema = {MATERIAL_SCHEMA}",
        f"name = {material.name}",
        f"chi11 = {material.chi11!r}",
        f"chi44 = {material.chi44!r}",
        f"r41 = {material.r41!r}",
        f"sellmeier_a = {a!r}",
        f"sellmeier_b = {b!r}",
        f"sellmeier_c = {c!r}",
        "nir_domain_um = {!r}, {!r}".format(*material.nir_domain_um),
    ]
    lines += [f"thz_index = {f!r}, {n!r}" for f, n in material.thz_table]
    return "\n".join(lines) + "\n"


def resolve_material_path(ref: str | os.PathLike) -> Path:
    """Find a material file by path, then along ``$EOCORR_MATERIAL_PATH``,
    then among the bundled files."""
    p = Path(ref)
    if p.is_file():
        return p
    for entry in os.environ.get(MATERIAL_PATH_ENV, "").split(os.pathsep):
        if entry and (Path(entry) / p).is_file():
            return Path(entry) / p
    bundled = resources.files("eocorr") / "data" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"material file {str(ref)!r} not found")


def load_material(ref: str | os.PathLike = "znte.mat") -> ZnTeMaterial:
    return parse_material(resolve_material_path(ref).read_text())


_DEFAULT = None


def default_material() -> ZnTeMaterial:
    """The bundled ZnTe material (cached)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_material("znte.mat")
    return _DEFAULT


# -- environment and geometry ----------------------------------------------

@dataclass(frozen=True)
class ThermalEnvironment:
    temperature: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")


@dataclass(frozen=True)
class BeamGeometry:
    """Focused Gaussian probe inside the crystal.

    ``rayleigh_range`` is derived on every access, so it cannot go stale
    when a copy is made with :func:`dataclasses.replace`.
    """

    waist_w0: float
    wavelength: float
    refractive_index: float
    crystal_length: float

    def __post_init__(self):
        if not self.waist_w0 > 0:
            raise DomainError("waist_w0 must be positive")
        if not self.crystal_length > 0:
            raise DomainError("crystal_length must be positive")
        if not (self.wavelength > 0 and self.refractive_index > 0):
            raise DomainError("wavelength and refractive_index must be positive")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_w0 ** 2 * self.refractive_index / self.wavelength

    def waist_at(self, y):
        return self.waist_w0 * np.sqrt(1.0 + (np.asarray(y) / self.rayleigh_range) ** 2)

    @classmethod
    def for_material(cls, material: ZnTeMaterial, waist_w0, wavelength, crystal_length):
        return cls(waist_w0, wavelength, float(material.nir_index(wavelength)), crystal_length)


# -- operations -------------------------------------------------------------

def planck_occupation(frequency, temperature):
    """Mean photon number 1/(exp(h f / k T) - 1) of a mode at ordinary
    frequency ``frequency`` (Hz)."""
    f = np.asarray(frequency, dtype=float)
    T = np.asarray(temperature, dtype=float)
    if np.any(~(f > 0)) or np.any(~(T > 0)):
        raise DomainError("frequency and temperature must be positive")
    x = H_PLANCK * f / (K_BOLTZMANN * T)
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(x)
    return out[()] if out.ndim == 0 else out


def _transverse_weight(y, delta_r, geometry, coherence_length):
    w = geometry.waist_at(y)
    val = (geometry.waist_w0 / w) * np.exp(-2.0 * delta_r ** 2 / (3.0 * w ** 2))
    if coherence_length is not None:
        val = val * np.exp(-0.5 * (y / coherence_length) ** 2)
    return val


def overlap_length(delta_r, geometry: BeamGeometry, coherence_length=None):
    """Length-integrated third-order overlap (m).

    Integrates the normalised transverse overlap over ``y`` in
    ``[-l/2, l/2]`` with the diverging waist. ``coherence_length``, if
    given, adds a Gaussian weight exp(-y^2 / 2 l_c^2) that limits how much
    of the crystal contributes coherently.
    """
    dr = np.atleast_1d(np.asarray(delta_r, dtype=float))
    if np.any(dr < 0):
        raise DomainError("delta_r must be non-negative")
    half = geometry.crystal_length / 2.0
    # integrand is even in y
    out = np.array([
        2.0 * quad(_transverse_weight, 0.0, half, args=(d, geometry, coherence_length),
                   epsabs=0.0, epsrel=1e-12, limit=200)[0]
        for d in dr
    ])
    return out[0] if np.ndim(delta_r) == 0 else out


def overlap3(delta_r, geometry: BeamGeometry):
    """Dimensionless overlap of ``g^2(r - dr/2) g(r + dr/2)``, averaged
    over the crystal length; 1 at zero separation in the thin-crystal limit."""
    return overlap_length(delta_r, geometry) / geometry.crystal_length


def phase_mismatch(omega_thz, material: ZnTeMaterial, probe_wavelength):
    """Velocity mismatch dk = Omega (n_g,NIR - n_THz(Omega)) / c in rad/m."""
    om = np.asarray(omega_thz, dtype=float)
    if np.any(om < 0):
        raise DomainError("omega_thz must be non-negative")
    ng = material.group_index(probe_wavelength)
    return om * (ng - material.thz_index(om)) / C_LIGHT
