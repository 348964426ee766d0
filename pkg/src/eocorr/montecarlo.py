"""Per-pulse simulation of the two balanced detectors and the
RF-referenced correlation estimator.

Units. Readouts are in detector volts. The detector gain is matched to the
normalisation constant C (see :func:`matched_detector_gain`): a THz field
correlation G in V^2/m^2 shows up as a readout covariance C * G, so
dividing an estimated covariance by C gives back field units directly.

Random streams. Sweep point ``i`` draws from
``Generator(Philox(SeedSequence(seed, spawn_key=(i,))))``. Each point owns
its stream, so the result does not depend on the number of workers or on
the order in which points finish.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .analysis import eo_ellipticity_gain, normalization_constant
from .kerr import KerrModelParams, g1_kerr, shot_noise_sigma
from .physics import BeamGeometry, ThermalEnvironment, ZnTeMaterial
from .probes import ProbePair
from .thermal import EOModelOptions, ModeGrid, g1_eo
from .traces import CorrelationTrace, check_uniform

RECORD_MAGIC = b"EOPS"
RECORD_VERSION = 1
# magic, version, n_pairs, seed, sha256 of the scenario
_HEADER = struct.Struct("<4sIQQ32s")
REFERENCING_FACTOR = 2.0


class CovarianceError(ValueError):
    """Requested signal covariance is not positive semidefinite."""


def matched_detector_gain(pair: ProbePair, material: ZnTeMaterial, geometry: BeamGeometry) -> float:
    """Gain per photoelectron that makes readout covariance equal C * G.

    A field E rotates the probe by a * E; the balanced difference of N
    photons is then 2 N a E photoelectrons. With the same gain ``g`` on both
    detectors the EO covariance is g^2 4 N_t N_tau a^2 G, and setting that
    equal to C G fixes g.
    """
    C = normalization_constant(pair, material, geometry)
    a = eo_ellipticity_gain(pair.pulse_tau, material, geometry)
    n = pair.pulse_t.photon_number * pair.pulse_tau.photon_number
    return math.sqrt(C / (4.0 * n * a * a))


@dataclass(frozen=True)
class StreamGenerators:
    """Everything that feeds one simulated stream, in detector units.

    ``eo_cov`` is the 2x2 covariance of the thermal EO signals on the two
    detectors in a single slot. ``kappa_t`` is the fraction of detector t's
    shot noise copied onto detector tau, ``kappa_tau`` the reverse.
    """

    sigma_t: float
    sigma_tau: float
    eo_cov: tuple = ((0.0, 0.0), (0.0, 0.0))
    kappa_t: float = 0.0
    kappa_tau: float = 0.0
    offset_t: float = 0.0
    offset_tau: float = 0.0

    def __post_init__(self):
        if self.sigma_t < 0 or self.sigma_tau < 0:
            raise ValueError("shot-noise sigmas must be non-negative")
        cov = np.asarray(self.eo_cov, dtype=float)
        if cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
            raise CovarianceError("eo_cov must be a finite 2x2 matrix")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise CovarianceError("eo_cov must be symmetric")
        scale = max(np.abs(cov).max(), 1e-300)
        if np.linalg.eigvalsh(cov).min() < -1e-10 * scale:
            raise CovarianceError(f"eo_cov is not positive semidefinite: {cov.tolist()}")

    def expected_cross_covariance(self) -> float:
        return (self.eo_cov[0][1] + self.kappa_t * self.sigma_t ** 2
                + self.kappa_tau * self.sigma_tau ** 2)


@dataclass
class PulseStreamRecord:
    readout_t: np.ndarray
    readout_tau: np.ndarray
    seed: int
    scenario_hash: str = ""

    def __post_init__(self):
        self.readout_t = np.ascontiguousarray(self.readout_t, dtype="<f8")
        self.readout_tau = np.ascontiguousarray(self.readout_tau, dtype="<f8")
        if self.readout_t.shape != self.readout_tau.shape or self.readout_t.ndim != 1:
            raise ValueError("readout arrays must be 1-D and the same length")
        if not (np.all(np.isfinite(self.readout_t)) and np.all(np.isfinite(self.readout_tau))):
            raise ValueError("readouts must be finite")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def n_pairs(self) -> int:
        return self.readout_t.size

    def dump(self, path):
        """Little-endian flat file: header then readout_t then readout_tau."""
        digest = bytes.fromhex(self.scenario_hash) if self.scenario_hash else bytes(32)
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(RECORD_MAGIC, RECORD_VERSION, self.n_pairs, self.seed, digest))
            fh.write(self.readout_t.tobytes())
            fh.write(self.readout_tau.tobytes())

    @classmethod
    def load(cls, path) -> "PulseStreamRecord":
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, n, seed, digest = _HEADER.unpack_from(raw)
        if magic != RECORD_MAGIC or version != RECORD_VERSION:
            raise ValueError(f"{path}: not a version-{RECORD_VERSION} pulse stream record")
        if len(raw) != _HEADER.size + 16 * n:
            raise ValueError(f"{path}: body length does not match n_pairs={n}")
        body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        h = "" if digest == bytes(32) else digest.hex()
        return cls(body[:n].copy(), body[n:].copy(), seed, h)


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def simulate_pulse_stream(generators: StreamGenerators, n_pairs: int, seed: int,
                          rng: np.random.Generator | None = None,
                          scenario_hash: str = "") -> PulseStreamRecord:
    """Readouts of both detectors for ``n_pairs`` consecutive pulse slots.

    S_t   = s_t   + o_t   + sigma_t   xi_t   + kappa_tau sigma_tau xi_tau
    S_tau = s_tau + o_tau + sigma_tau xi_tau + kappa_t   sigma_t   xi_t

    The thermal pair (s_t, s_tau) is redrawn every slot: its coherence time
    is far below the pulse spacing.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    g = generators
    rng = rng if rng is not None else point_rng(seed, 0)
    z = rng.standard_normal((4, n_pairs))
    (v_t, c), (_, v_tau) = g.eo_cov
    # explicit 2x2 Cholesky; tolerate tiny negative round-off in the Schur term
    if v_t > 0:
        l11 = math.sqrt(v_t)
        l21 = c / l11
        l22 = math.sqrt(max(v_tau - l21 * l21, 0.0))
    else:
        l11, l21, l22 = 0.0, 0.0, math.sqrt(max(v_tau, 0.0))
    shot_t = g.sigma_t * z[2]
    shot_tau = g.sigma_tau * z[3]
    s_t = l11 * z[0] + g.offset_t + shot_t + g.kappa_tau * shot_tau
    s_tau = l21 * z[0] + l22 * z[1] + g.offset_tau + shot_tau + g.kappa_t * shot_t
    return PulseStreamRecord(s_t, s_tau, seed, scenario_hash)


@dataclass(frozen=True)
class EstimatorResult:
    """Difference-product average. ``value`` is in detector V^2 and equals
    twice the single-slot cross-covariance; ``normalized`` divides by C."""

    value: float
    standard_error: float
    n_pairs: int
    normalization_C: float | None = None

    @property
    def normalized(self):
        return None if self.normalization_C is None else self.value / self.normalization_C

    @property
    def normalized_se(self):
        return None if self.normalization_C is None else self.standard_error / self.normalization_C


def rf_referenced_estimator(record: PulseStreamRecord, normalization_C: float | None = None
                            ) -> EstimatorResult:
    """Mean of (S_t(i) - S_t(i+1)) (S_tau(i) - S_tau(i+1)) over the
    non-overlapping slot pairs (0, 1), (2, 3), ..., with a jackknife error."""
    m = record.n_pairs // 2
    if m < 2:
        raise ValueError("the estimator needs at least four slots")
    t = record.readout_t[: 2 * m].reshape(m, 2)
    u = record.readout_tau[: 2 * m].reshape(m, 2)
    prod = (t[:, 0] - t[:, 1]) * (u[:, 0] - u[:, 1])
    mean = float(prod.mean())
    loo = (prod.sum() - prod) / (m - 1)
    se = math.sqrt((m - 1) / m * float(np.square(loo - loo.mean()).sum()))
    if not se > 0:
        # a perfectly constant product has no spread; report the float floor
        se = max(abs(mean), 1.0) * np.finfo(float).eps
    return EstimatorResult(mean, se, m, normalization_C)


# -- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class DetectionModel:
    """Physical configuration behind a Monte-Carlo sweep."""

    pair: ProbePair
    material: ZnTeMaterial
    geometry: BeamGeometry
    environment: ThermalEnvironment
    kerr: KerrModelParams = KerrModelParams()
    eo_grid: ModeGrid = ModeGrid()
    eo_options: EOModelOptions = EOModelOptions()
    include_eo: bool = True
    include_kerr: bool = True
    include_shot: bool = True
    offsets: tuple = (0.0, 0.0)

    def normalization(self) -> float:
        return normalization_constant(self.pair, self.material, self.geometry)

    def analytic(self, tau_grid, delta_r) -> dict:
        """Analytic EO and Kerr traces (V^2/m^2) on ``tau_grid``."""
        pair = self.pair.with_separation(delta_r)
        out = {}
        tau = np.asarray(tau_grid, dtype=float)
        if self.include_eo:
            out["eo"] = g1_eo(tau, delta_r, self.environment, self.material, self.geometry,
                              pair.pulse_tau, self.eo_grid, self.eo_options)
            out["eo_zero"] = g1_eo(np.zeros(1), 0.0, self.environment, self.material,
                                   self.geometry, pair.pulse_tau, self.eo_grid,
                                   self.eo_options).values[0]
        if self.include_kerr:
            out["kerr"] = g1_kerr(tau, delta_r, pair, self.material, self.geometry, self.kerr)
        return out

    def generators(self, analytic: dict, index: int) -> StreamGenerators:
        """Stream generators at grid point ``index`` of a precomputed sweep.

        The Kerr term is split evenly between both directions, which makes
        its contribution to the cross-covariance equal C * G_Kerr.
        """
        C = self.normalization()
        gain = matched_detector_gain(self.pair, self.material, self.geometry)
        if self.include_shot:
            s_t = shot_noise_sigma(self.pair.pulse_t, gain)
            s_tau = shot_noise_sigma(self.pair.pulse_tau, gain)
        else:
            s_t = s_tau = 0.0
        cov = ((0.0, 0.0), (0.0, 0.0))
        if "eo" in analytic:
            v = C * analytic["eo_zero"]
            cov = ((v, C * analytic["eo"].values[index]), (C * analytic["eo"].values[index], v))
        kappa = 0.0
        if "kerr" in analytic and s_t + s_tau > 0:
            kappa = C * analytic["kerr"].values[index] / (s_t ** 2 + s_tau ** 2)
        return StreamGenerators(s_t, s_tau, cov, kappa, kappa, *self.offsets)


@dataclass
class SweepResult:
    trace: CorrelationTrace
    analytic: CorrelationTrace
    estimates: list = field(default_factory=list)


def _config_hash(model: DetectionModel, delta_r, n_pairs) -> str:
    blob = repr((asdict(model.pair), model.material.digest(), asdict(model.geometry),
                 model.environment.temperature, asdict(model.kerr), asdict(model.eo_grid),
                 asdict(model.eo_options), model.include_eo, model.include_kerr,
                 model.include_shot, model.offsets, float(delta_r), int(n_pairs)))
    return hashlib.sha256(blob.encode()).hexdigest()


def correlation_sweep(tau_grid, delta_r, model: DetectionModel, n_pairs: int, seed: int,
                      workers: int = 1, point_offset: int = 0) -> SweepResult:
    """Monte-Carlo G1(tau) at fixed separation, in V^2/m^2.

    Each tau point simulates ``n_pairs`` slots and applies the estimator.
    The referencing factor 2 and the constant C are divided out, so the
    trace is directly comparable with the analytic models; ``se`` holds the
    per-point standard errors (the 2-sigma interval is ``trace.ci2()``).
    ``point_offset`` shifts the RNG stream index, for callers that run
    several sweeps under one seed.
    """
    tau = check_uniform(tau_grid, "tau grid", min_points=1)
    analytic = model.analytic(tau, delta_r)
    C = model.normalization()
    h = _config_hash(model, delta_r, n_pairs)

    def run(i):
        gen = model.generators(analytic, i)
        rec = simulate_pulse_stream(gen, n_pairs, seed, point_rng(seed, point_offset + i), h)
        return rf_referenced_estimator(rec, C)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(run, range(tau.size)))
    else:
        estimates = [run(i) for i in range(tau.size)]
    values = np.array([e.normalized for e in estimates]) / REFERENCING_FACTOR
    se = np.array([e.normalized_se for e in estimates]) / REFERENCING_FACTOR
    expected = np.zeros_like(tau)
    for key in ("eo", "kerr"):
        if key in analytic:
            expected = expected + analytic[key].values
    meta = {"kind": "montecarlo", "n_pairs": n_pairs, "seed": seed, "scenario_hash": h,
            "referencing_factor_divided": REFERENCING_FACTOR, "normalization_C": C,
            "rng": "Philox, SeedSequence(seed, spawn_key=(point_offset + i,))",
            "point_offset": point_offset}
    return SweepResult(CorrelationTrace(tau, values, delta_r, se, meta),
                       CorrelationTrace(tau, expected, delta_r, None, {"kind": "analytic_total"}),
                       estimates)
