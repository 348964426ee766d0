"""Trace analysis: Gaussian fitting, Kaiser-windowed spectra, peak-to-peak
extraction and normalisation to field units."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .physics import C_LIGHT, BeamGeometry, ZnTeMaterial
from .probes import DECONVOLUTION_FACTOR, ProbePair, ProbePulse
from .traces import CorrelationTrace, SignalTrace, check_uniform, write_columns

FOUR_LN2 = 4.0 * math.log(2.0)
PARAM_NAMES = ("a", "b", "c", "d", "gamma")


# -- Gaussian fit -----------------------------------------------------------

def gaussian_model(tau, a, b, c, d, gamma):
    """g(tau) = c + a tau + b exp(-4 ln2 (tau - d)^2 / gamma^2)."""
    tau = np.asarray(tau, dtype=float)
    return c + a * tau + b * np.exp(-FOUR_LN2 * (tau - d) ** 2 / gamma ** 2)


@dataclass
class FitResult:
    params: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    nfev: int = 0
    message: str = ""

    def sigma(self, name):
        i = PARAM_NAMES.index(name)
        return math.sqrt(max(self.covariance[i, i], 0.0))

    def ci2(self, name):
        """Half-width of the 2-sigma interval of parameter ``name``."""
        return 2.0 * self.sigma(name)

    @property
    def tau_p(self):
        return DECONVOLUTION_FACTOR * self.params["gamma"]

    @property
    def tau_p_ci2(self):
        return DECONVOLUTION_FACTOR * self.ci2("gamma")

    def to_dict(self):
        return {"params": dict(self.params), "covariance": self.covariance.tolist(),
                "residual_norm": self.residual_norm, "converged": self.converged,
                "nfev": self.nfev, "message": self.message}


def _xy(trace):
    if isinstance(trace, (SignalTrace, CorrelationTrace)):
        return trace.x, trace.values
    x, y = trace
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def initial_guess(x, y):
    """Deterministic starting point.

    Baseline from a straight line through the outer 15 % of points at each
    end; ``b`` is the largest excursion from the median of the
    baseline-free data; ``d`` its position; ``gamma`` the distance between
    the half-maximum crossings around it.
    """
    n = x.size
    m = max(2, int(round(0.15 * n)))
    edge = np.r_[0:m, n - m:n]
    a, c = np.polyfit(x[edge], y[edge], 1)
    r = y - (c + a * x)
    med = np.median(r)
    k = int(np.argmax(np.abs(r - med)))
    b = r[k] - med
    half = np.abs(r - med) >= 0.5 * abs(b)
    lo = k
    while lo > 0 and half[lo - 1]:
        lo -= 1
    hi = k
    while hi < n - 1 and half[hi + 1]:
        hi += 1
    step = x[1] - x[0]
    gamma = max((hi - lo + 1) * step, 2 * step)
    return {"a": a, "b": b, "c": c + med, "d": x[k], "gamma": gamma}


def gaussian_fit(trace, guess=None, max_iter=200, rtol=1e-10) -> FitResult:
    """Least-squares fit of :func:`gaussian_model`.

    The problem is solved in scaled units (delay in units of the initial
    width, values in units of the initial amplitude) and mapped back; the
    parameter covariance is ``s^2 (J^T J)^-1`` with ``s^2`` the residual
    variance.
    """
    x, y = _xy(trace)
    if x.size < 8:
        raise ValueError("gaussian_fit needs at least 8 points")
    g = dict(initial_guess(x, y))
    if guess:
        g.update(guess)
    x0 = 0.5 * (x[0] + x[-1])
    s = abs(g["gamma"])
    ys = abs(g["b"]) if g["b"] != 0 else max(np.max(np.abs(y)), 1e-300)
    xs = (x - x0) / s
    yy = y / ys
    p0 = np.array([g["a"] * s / ys, g["b"] / ys, (g["c"] + g["a"] * x0) / ys,
                   (g["d"] - x0) / s, abs(g["gamma"]) / s])

    def resid(p):
        a, b, c, d, gm = p
        return c + a * xs + b * np.exp(-FOUR_LN2 * (xs - d) ** 2 / gm ** 2) - yy

    def jac(p):
        a, b, c, d, gm = p
        u = xs - d
        e = np.exp(-FOUR_LN2 * u ** 2 / gm ** 2)
        return np.column_stack([xs, e, np.ones_like(xs),
                                b * e * 2 * FOUR_LN2 * u / gm ** 2,
                                b * e * 2 * FOUR_LN2 * u ** 2 / gm ** 3])

    res = least_squares(resid, p0, jac=jac, method="lm", ftol=rtol, xtol=rtol,
                        gtol=rtol, max_nfev=max_iter)
    a_, b_, c_, d_, g_ = res.x
    params = {"a": a_ * ys / s, "b": b_ * ys, "c": c_ * ys - a_ * ys / s * x0,
              "d": x0 + s * d_, "gamma": abs(g_) * s}
    dof = max(x.size - 5, 1)
    s2 = 2.0 * res.cost / dof
    cov_scaled = np.linalg.pinv(res.jac.T @ res.jac) * s2
    T = np.zeros((5, 5))
    T[0, 0] = ys / s
    T[1, 1] = ys
    T[2, 2] = ys
    T[2, 0] = -x0 * ys / s
    T[3, 3] = s
    T[4, 4] = s
    cov = T @ cov_scaled @ T.T
    cov = 0.5 * (cov + cov.T)
    return FitResult(params, cov, math.sqrt(2.0 * res.cost) * ys, bool(res.status > 0),
                     int(res.nfev), str(res.message))


# -- peak-to-peak -----------------------------------------------------------

def peak_to_peak(trace, baseline="none", fit: FitResult | None = None):
    """Peak-to-peak amplitude and the half-width of its 2-sigma interval.

    ``baseline="linear"`` takes the fitted bump with its baseline
    ``c + a tau`` removed (fitting here if ``fit`` is not supplied), with
    the 2-sigma interval of ``b``. Otherwise the interval comes from per-point standard
    errors when the trace carries them, and is zero for analytic traces.
    """
    x, y = _xy(trace)
    if y.size == 0:
        raise ValueError("empty trace")
    if baseline == "linear":
        fit = fit or gaussian_fit(trace)
        p = fit.params
        bump = gaussian_model(x, 0.0, p["b"], 0.0, p["d"], p["gamma"])
        return float(np.ptp(bump)), fit.ci2("b")
    if baseline != "none":
        raise ValueError(f"unknown baseline mode {baseline!r}")
    imax, imin = int(np.argmax(y)), int(np.argmin(y))
    value = float(y[imax] - y[imin])
    se = getattr(trace, "se", None)
    if se is None:
        return value, 0.0
    return value, 2.0 * math.hypot(se[imax], se[imin])


# -- spectra ----------------------------------------------------------------

@dataclass
class SpectrumTrace:
    frequencies: np.ndarray
    magnitudes: np.ndarray
    spectrum: np.ndarray
    window: dict
    pad_factor: int
    scale: str = "magnitude"
    parseval_residual: float = 0.0
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path):
        write_columns(path, ["freq_THz", self.scale], [self.frequencies * 1e-12, self.magnitudes])


def windowed_spectrum(trace, kaiser_beta=6.0, pad_factor=4, scale="magnitude",
                      window="kaiser") -> SpectrumTrace:
    """One-sided spectrum of a uniformly sampled trace.

    The trace is multiplied by a Kaiser window, zero-padded to
    ``pad_factor`` times its length and transformed. The complex spectrum
    is phase-referenced to ``tau = 0`` so an even trace gives a real
    spectrum. Magnitudes are in trace units times seconds.
    """
    x, y = _xy(trace)
    x = check_uniform(x, "trace grid")
    if scale not in ("magnitude", "power"):
        raise ValueError("scale must be 'magnitude' or 'power'")
    if int(pad_factor) < 1:
        raise ValueError("pad_factor must be >= 1")
    n = x.size
    dt = x[1] - x[0]
    if window == "kaiser":
        w = np.kaiser(n, kaiser_beta)
        wmeta = {"name": "kaiser", "beta": float(kaiser_beta)}
    elif window in ("rect", "rectangular", "boxcar"):
        w = np.ones(n)
        wmeta = {"name": "rectangular", "beta": None}
    else:
        raise ValueError(f"unknown window {window!r}")
    yw = y * w
    full = np.fft.fft(yw)
    energy = float(np.sum(yw ** 2))
    parseval = abs(energy - float(np.sum(np.abs(full) ** 2)) / n) / energy if energy else 0.0
    if parseval > 1e-9:
        raise RuntimeError(f"Parseval check failed ({parseval:.3g})")
    n_pad = int(pad_factor) * n
    freqs = np.fft.rfftfreq(n_pad, dt)
    spec = np.fft.rfft(yw, n_pad) * dt * np.exp(-2j * np.pi * freqs * x[0])
    mags = np.abs(spec) if scale == "magnitude" else np.abs(spec) ** 2
    return SpectrumTrace(freqs, mags, spec, wmeta, int(pad_factor), scale, parseval)


def spectral_peak(spectrum: SpectrumTrace, fmin=0.0) -> float:
    """Frequency of the largest magnitude, refined by a parabola through
    the three bins around it."""
    f, m = spectrum.frequencies, spectrum.magnitudes
    sel = np.nonzero(f >= fmin)[0]
    k = sel[np.argmax(m[sel])]
    if 0 < k < f.size - 1:
        y0, y1, y2 = m[k - 1], m[k], m[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            off = 0.5 * (y0 - y2) / den
            return float(f[k] + off * (f[1] - f[0]))
    return float(f[k])


def spectral_fwhm(spectrum: SpectrumTrace) -> float:
    """Full width at half maximum of the dominant peak. A peak in the
    zero-frequency bin is treated as the centre of a symmetric two-sided
    line, so the width is twice the half-maximum frequency."""
    f, m = spectrum.frequencies, spectrum.magnitudes
    k = int(np.argmax(m))
    half = 0.5 * m[k]

    def crossing(idx_range):
        prev = k
        for i in idx_range:
            if m[i] < half:
                # linear interpolation between prev and i
                t = (m[prev] - half) / (m[prev] - m[i])
                return f[prev] + t * (f[i] - f[prev])
            prev = i
        return None

    right = crossing(range(k + 1, f.size))
    if right is None:
        raise ValueError("spectrum does not fall to half maximum")
    if k == 0:
        return float(2 * right)
    left = crossing(range(k - 1, -1, -1))
    return float(right - (left if left is not None else 0.0))


# -- normalisation ----------------------------------------------------------

def normalization_constant(pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry) -> float:
    """C = r41 n^3 l w_p I_t I_tau / c.

    ``n`` is the NIR index of the geometry, ``w_p`` the probe's angular
    carrier frequency and ``I`` the peak on-axis intensities of the two
    z-polarized probes.
    """
    i_t = pair.pulse_t.peak_intensity("z")
    i_tau = pair.pulse_tau.peak_intensity("z")
    if i_t <= 0 or i_tau <= 0:
        raise ValueError("normalization needs non-zero probe intensities")
    n = geometry.refractive_index
    return (material.r41 * n ** 3 * geometry.crystal_length * pair.pulse_tau.angular_frequency
            * i_t * i_tau / C_LIGHT)


def normalize_by_C(raw, pair, material, geometry):
    """Divide a raw correlation (scalar, array or trace) by C.

    Traces come back as copies with ``normalization_C`` in their metadata.
    """
    C = normalization_constant(pair, material, geometry)
    if isinstance(raw, CorrelationTrace):
        se = None if raw.se is None else raw.se / C
        return replace(raw, values=raw.values / C, se=se,
                       metadata={**raw.metadata, "normalization_C": C})
    return np.asarray(raw, dtype=float) / C if np.ndim(raw) else float(raw) / C


def eo_ellipticity_gain(pulse: ProbePulse, material: ZnTeMaterial, geometry: BeamGeometry) -> float:
    """Probe ellipticity per unit THz field, w_p n^3 r41 l / (2 c), in rad m/V."""
    n = geometry.refractive_index
    return pulse.angular_frequency * n ** 3 * material.r41 * geometry.crystal_length / (2 * C_LIGHT)
