"""Scenario files and reproducible sweep runs.

A scenario is an INI file (``configparser`` syntax) with a ``[meta]``
section carrying ``schema_version``. Units are in the key names. Exactly
one quantity is swept; every other quantity is fixed by its section.

Outputs of :func:`run_scenario` are written without timestamps and with
fixed float formatting, so the same scenario and seed give byte-identical
files. ``manifest.json`` lists every other output with its sha256.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (gaussian_fit, peak_to_peak, spectral_fwhm, spectral_peak,
                       windowed_spectrum)
from .classical import calibrate_k_det, s3_trace
from .kerr import KerrModelParams
from .montecarlo import DetectionModel, correlation_sweep
from .physics import (BeamGeometry, DomainError, MaterialFileError, ThermalEnvironment,
                      load_material, resolve_material_path)
from .probes import ProbePair, ProbePulse
from .thermal import EOModelOptions, ModeGrid, QuadratureError
from .traces import CorrelationTrace, GridError, check_uniform, dump_json

SCHEMA_VERSION = 1
SWEEP_AXES = ("tau", "delta_r", "power", "wavelength", "crystal_length", "temperature")
AXIS_UNITS = {"tau": "fs", "delta_r": "um", "power": "mW", "wavelength": "nm",
              "crystal_length": "mm", "temperature": "K"}
MODES = ("classical", "analytic", "montecarlo")
POWER_TARGETS = ("t", "tau", "both")
COMPONENTS = ("eo", "kerr")


class ScenarioError(ValueError):
    """Scenario file violates the schema. ``where`` locates the problem."""

    def __init__(self, message, where=""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class ProbeSpec:
    wavelength_nm: float = 800.0
    duration_fs: float = 200.0
    waist_um: float = 10.0
    power_z_mw: float = 0.8
    power_x_mw: float = 0.0
    rep_rate_mhz: float = 80.0

    def pulse(self) -> ProbePulse:
        return ProbePulse(self.wavelength_nm * 1e-9, self.duration_fs * 1e-15,
                          self.waist_um * 1e-6, self.power_z_mw * 1e-3,
                          self.power_x_mw * 1e-3, self.rep_rate_mhz * 1e6)


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    sweep_axis: str
    sweep_values: tuple
    seed: int
    description: str = ""
    probe_t: ProbeSpec = ProbeSpec()
    probe_tau: ProbeSpec = ProbeSpec()
    material: str = "znte.mat"
    crystal_length_mm: float = 1.0
    temperature_k: float = 300.0
    delta_r_um: float = 0.0
    power_target: str = "both"
    tau_min_fs: float = -1500.0
    tau_max_fs: float = 1500.0
    tau_points: int = 61
    components: tuple = COMPONENTS
    kerr_shape: str = "phase_matched"
    n_pairs: int = 200000
    workers: int = 1
    window: str = "kaiser"
    kaiser_beta: float = 6.0
    pad_factor: int = 4
    fit: bool = True
    calibration_power_mw: float = 6.3
    calibration_pp_mv: float = 56.0
    output_dir: str = "out"
    base_dir: str = field(default="", compare=False)

    # -- derived objects ---------------------------------------------------

    def tau_grid(self):
        if self.sweep_axis == "tau":
            return np.asarray(self.sweep_values, dtype=float) * 1e-15
        return np.linspace(self.tau_min_fs, self.tau_max_fs, self.tau_points) * 1e-15

    def material_path(self) -> Path:
        p = Path(self.material)
        if not p.is_absolute() and self.base_dir and (Path(self.base_dir) / p).is_file():
            p = Path(self.base_dir) / p
        return resolve_material_path(p)

    def hash(self) -> str:
        return hashlib.sha256(dumps_scenario(self).encode()).hexdigest()


# -- parsing ---------------------------------------------------------------

def _line_of(text, section, key=None):
    sec = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            sec = m.group(1).strip()
            if key is None and sec == section:
                return no
            continue
        if sec == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return no
    return None


def _where(text, section, key=None):
    no = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"line {no}: {loc}" if no else loc


_SECTIONS = {
    "meta": {"schema_version", "name", "description"},
    "probe_t": {f.name for f in fields(ProbeSpec)},
    "probe_tau": {f.name for f in fields(ProbeSpec)},
    "crystal": {"material", "length_mm"},
    "environment": {"temperature_k"},
    "sweep": {"axis", "values", "power_target"},
    "model": {"mode", "components", "delta_r_um", "tau_min_fs", "tau_max_fs", "tau_points",
              "kerr_shape", "calibration_power_mw", "calibration_pp_mv"},
    "estimator": {"n_pairs", "seed", "workers"},
    "analysis": {"window", "kaiser_beta", "pad_factor", "fit"},
    "output": {"directory"},
}
_REQUIRED = {"meta": {"schema_version", "name"}, "sweep": {"axis", "values"},
             "model": {"mode"}, "estimator": {"seed"}}


def loads_scenario(text: str, base_dir="") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(str(exc).replace("\n", " ")) from None
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ScenarioError("unknown section", _where(text, sec))
        for key in cp[sec]:
            if key not in _SECTIONS[sec]:
                raise ScenarioError("unknown key", _where(text, sec, key))
    for sec, keys in _REQUIRED.items():
        for key in keys:
            if not cp.has_option(sec, key):
                raise ScenarioError("required key missing", f"[{sec}] {key}")

    def get(sec, key, conv, default=None):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key).strip()
        try:
            val = conv(raw)
        except ValueError as exc:
            raise ScenarioError(f"bad value {raw!r} ({exc})", _where(text, sec, key)) from None
        if isinstance(val, float) and not math.isfinite(val):
            raise ScenarioError("value must be finite", _where(text, sec, key))
        return val

    def boolean(raw):
        low = raw.lower()
        if low in ("yes", "true", "on", "1"):
            return True
        if low in ("no", "false", "off", "0"):
            return False
        raise ValueError("expected yes or no")

    def floats(raw):
        return tuple(float(v) for v in raw.replace("\n", ",").split(",") if v.strip())

    def names(raw):
        return tuple(v.strip() for v in raw.split(",") if v.strip())

    version = get("meta", "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema version {version} (supported: {SCHEMA_VERSION})",
                            _where(text, "meta", "schema_version"))

    def probe(sec):
        d = ProbeSpec()
        return ProbeSpec(**{f.name: get(sec, f.name, float, getattr(d, f.name))
                            for f in fields(ProbeSpec)})

    d = Scenario("", "analytic", "tau", (), 0)
    sc = Scenario(
        name=get("meta", "name", str),
        description=get("meta", "description", str, ""),
        mode=get("model", "mode", str),
        sweep_axis=get("sweep", "axis", str),
        sweep_values=get("sweep", "values", floats),
        power_target=get("sweep", "power_target", str, d.power_target),
        seed=get("estimator", "seed", int),
        n_pairs=get("estimator", "n_pairs", int, d.n_pairs),
        workers=get("estimator", "workers", int, d.workers),
        probe_t=probe("probe_t"),
        probe_tau=probe("probe_tau"),
        material=get("crystal", "material", str, d.material),
        crystal_length_mm=get("crystal", "length_mm", float, d.crystal_length_mm),
        temperature_k=get("environment", "temperature_k", float, d.temperature_k),
        delta_r_um=get("model", "delta_r_um", float, d.delta_r_um),
        tau_min_fs=get("model", "tau_min_fs", float, d.tau_min_fs),
        tau_max_fs=get("model", "tau_max_fs", float, d.tau_max_fs),
        tau_points=get("model", "tau_points", int, d.tau_points),
        components=get("model", "components", names, d.components),
        kerr_shape=get("model", "kerr_shape", str, d.kerr_shape),
        calibration_power_mw=get("model", "calibration_power_mw", float, d.calibration_power_mw),
        calibration_pp_mv=get("model", "calibration_pp_mv", float, d.calibration_pp_mv),
        window=get("analysis", "window", str, d.window),
        kaiser_beta=get("analysis", "kaiser_beta", float, d.kaiser_beta),
        pad_factor=get("analysis", "pad_factor", int, d.pad_factor),
        fit=get("analysis", "fit", boolean, d.fit),
        output_dir=get("output", "directory", str, d.output_dir),
        base_dir=str(base_dir),
    )
    validate_scenario(sc, text)
    return sc


def validate_scenario(sc: Scenario, text: str = "") -> None:
    def fail(msg, sec, key=None):
        raise ScenarioError(msg, _where(text, sec, key))

    if sc.mode not in MODES:
        fail(f"mode must be one of {MODES}", "model", "mode")
    if sc.sweep_axis not in SWEEP_AXES:
        fail(f"axis must be one of {SWEEP_AXES}", "sweep", "axis")
    if not sc.sweep_values:
        fail("sweep value list is empty", "sweep", "values")
    if sc.power_target not in POWER_TARGETS:
        fail(f"power_target must be one of {POWER_TARGETS}", "sweep", "power_target")
    if not 0 <= sc.seed < 2 ** 64:
        fail("seed must be a non-negative 64-bit integer", "estimator", "seed")
    if sc.n_pairs < 4:
        fail("n_pairs must be at least 4", "estimator", "n_pairs")
    if sc.workers < 1:
        fail("workers must be at least 1", "estimator", "workers")
    if not sc.components or any(c not in COMPONENTS for c in sc.components):
        fail(f"components must be a non-empty subset of {COMPONENTS}", "model", "components")
    if sc.kerr_shape not in ("flat", "phase_matched"):
        fail("kerr_shape must be flat or phase_matched", "model", "kerr_shape")
    if sc.tau_points < 8 or not sc.tau_max_fs > sc.tau_min_fs:
        fail("need tau_points >= 8 and tau_max_fs > tau_min_fs", "model", "tau_points")
    if sc.window not in ("kaiser", "rect"):
        fail("window must be kaiser or rect", "analysis", "window")
    if sc.pad_factor < 1:
        fail("pad_factor must be at least 1", "analysis", "pad_factor")
    if sc.mode == "classical" and sc.sweep_axis not in ("tau", "power", "delta_r"):
        fail("classical mode sweeps tau, power or delta_r only", "sweep", "axis")
    vals = np.asarray(sc.sweep_values)
    if sc.sweep_axis == "tau":
        if vals.size < 8:
            fail("a tau sweep needs at least 8 delays", "sweep", "values")
        try:
            check_uniform(vals * 1e-15, "tau sweep")
        except GridError as exc:
            fail(str(exc), "sweep", "values")
    elif sc.sweep_axis in ("power", "wavelength", "crystal_length", "temperature"):
        if np.any(vals <= 0):
            fail(f"{sc.sweep_axis} values must be positive", "sweep", "values")
    elif sc.sweep_axis == "delta_r" and np.any(vals < 0):
        fail("delta_r values must be non-negative", "sweep", "values")
    try:
        sc.probe_t.pulse()
        sc.probe_tau.pulse()
    except DomainError as exc:
        fail(str(exc), "probe_t")
    try:
        load_material(sc.material_path())
    except (FileNotFoundError, MaterialFileError) as exc:
        fail(str(exc), "crystal", "material")


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    return loads_scenario(text, base_dir=path.parent)


def _num(v):
    return repr(float(v))


def dumps_scenario(sc: Scenario) -> str:
    """Canonical text form; parsing it gives back an equal scenario."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["meta"] = {"schema_version": str(SCHEMA_VERSION), "name": sc.name,
                  "description": sc.description}
    for sec, spec in (("probe_t", sc.probe_t), ("probe_tau", sc.probe_tau)):
        cp[sec] = {k: _num(v) for k, v in asdict(spec).items()}
    cp["crystal"] = {"material": sc.material, "length_mm": _num(sc.crystal_length_mm)}
    cp["environment"] = {"temperature_k": _num(sc.temperature_k)}
    cp["sweep"] = {"axis": sc.sweep_axis, "values": ", ".join(_num(v) for v in sc.sweep_values),
                   "power_target": sc.power_target}
    cp["model"] = {"mode": sc.mode, "components": ", ".join(sc.components),
                   "delta_r_um": _num(sc.delta_r_um), "tau_min_fs": _num(sc.tau_min_fs),
                   "tau_max_fs": _num(sc.tau_max_fs), "tau_points": str(sc.tau_points),
                   "kerr_shape": sc.kerr_shape,
                   "calibration_power_mw": _num(sc.calibration_power_mw),
                   "calibration_pp_mv": _num(sc.calibration_pp_mv)}
    cp["estimator"] = {"n_pairs": str(sc.n_pairs), "seed": str(sc.seed),
                       "workers": str(sc.workers)}
    cp["analysis"] = {"window": sc.window, "kaiser_beta": _num(sc.kaiser_beta),
                      "pad_factor": str(sc.pad_factor), "fit": "yes" if sc.fit else "no"}
    cp["output"] = {"directory": sc.output_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# -- bundled scenarios -----------------------------------------------------

def bundled_scenarios() -> dict:
    root = resources.files("eocorr") / "data" / "scenarios"
    return {p.name[:-4]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".ini")}


def find_scenario(ref) -> Path:
    p = Path(ref)
    if p.is_file():
        return p
    bundled = bundled_scenarios()
    if str(ref) in bundled:
        return bundled[str(ref)]
    raise ScenarioError(f"scenario {str(ref)!r} not found (not a file or bundled name)")


# -- running ---------------------------------------------------------------

@dataclass
class PointResult:
    value: float
    status: str = "ok"
    trace: object = None
    spectrum: object = None
    summary: dict = field(default_factory=dict)


@dataclass
class RunResult:
    scenario: Scenario
    out_dir: Path
    points: list
    files: list

    @property
    def ok(self):
        return all(p.status == "ok" for p in self.points)


def _point_config(sc: Scenario, value):
    """Probe pair, geometry, temperature and separation at one sweep value."""
    pt, ptau = sc.probe_t, sc.probe_tau
    length, temp, dr = sc.crystal_length_mm, sc.temperature_k, sc.delta_r_um
    axis = sc.sweep_axis
    if axis == "power":
        if sc.power_target in ("t", "both"):
            ratio = pt.power_x_mw / pt.power_z_mw if pt.power_z_mw else 0.0
            pt = replace(pt, power_z_mw=value, power_x_mw=ratio * value)
        if sc.power_target in ("tau", "both"):
            ptau = replace(ptau, power_z_mw=value)
    elif axis == "wavelength":
        pt, ptau = replace(pt, wavelength_nm=value), replace(ptau, wavelength_nm=value)
    elif axis == "crystal_length":
        length = value
    elif axis == "temperature":
        temp = value
    elif axis == "delta_r":
        dr = value
    return pt, ptau, length, temp, dr * 1e-6


def _run_classical(sc, material, value, k_det):
    pt, ptau, length, _, dr = _point_config(sc, value)
    pair = ProbePair.build(pt.pulse(), ptau.pulse(), separation=dr)
    geom = BeamGeometry.for_material(material, ptau.waist_um * 1e-6, ptau.wavelength_nm * 1e-9,
                                     length * 1e-3)
    return s3_trace(pair, material, geom, sc.tau_grid(), k_det,
                    metadata={"sweep_axis": sc.sweep_axis, "sweep_value": value})


def _classical_k_det(sc, material):
    pt = replace(sc.probe_t, power_z_mw=sc.calibration_power_mw,
                 power_x_mw=(sc.probe_t.power_x_mw / sc.probe_t.power_z_mw
                             * sc.calibration_power_mw))
    pair = ProbePair.build(pt.pulse(), sc.probe_tau.pulse())
    geom = BeamGeometry.for_material(material, sc.probe_tau.waist_um * 1e-6,
                                     sc.probe_tau.wavelength_nm * 1e-9,
                                     sc.crystal_length_mm * 1e-3)
    return calibrate_k_det(pair, material, geom, sc.calibration_pp_mv * 1e-3)


def _detection_model(sc, material, value):
    pt, ptau, length, temp, dr = _point_config(sc, value)
    pair = ProbePair.build(pt.pulse(), ptau.pulse())
    geom = BeamGeometry.for_material(material, ptau.waist_um * 1e-6, ptau.wavelength_nm * 1e-9,
                                     length * 1e-3)
    model = DetectionModel(pair, material, geom, ThermalEnvironment(temp),
                           KerrModelParams(responsivity_shape=sc.kerr_shape),
                           ModeGrid(), EOModelOptions(),
                           include_eo="eo" in sc.components, include_kerr="kerr" in sc.components)
    return model, dr


def _run_correlation(sc, material, value, index, workers):
    model, dr = _detection_model(sc, material, value)
    tau = sc.tau_grid()
    if sc.mode == "montecarlo":
        res = correlation_sweep(tau, dr, model, sc.n_pairs, sc.seed, workers=workers,
                                point_offset=index * tau.size)
        trace = res.trace
    else:
        parts = model.analytic(tau, dr)
        values = sum(parts[k].values for k in ("eo", "kerr") if k in parts)
        trace = CorrelationTrace(tau, values, dr, None, {"kind": "analytic_total"})
    trace.metadata.update({"sweep_axis": sc.sweep_axis, "sweep_value": value,
                           "components": list(sc.components)})
    return trace


def _analyse(sc, trace):
    spec = windowed_spectrum(trace, sc.kaiser_beta, sc.pad_factor, window=sc.window)
    summary = {"spectral_peak_THz": spectral_peak(spec) * 1e-12}
    try:
        summary["spectral_fwhm_THz"] = spectral_fwhm(spec) * 1e-12
    except ValueError:
        summary["spectral_fwhm_THz"] = None
    fit = None
    if sc.fit:
        fit = gaussian_fit(trace)
        summary["fit"] = fit.to_dict()
        summary["fit_tau_p_fs"] = fit.tau_p * 1e15
        summary["fit_tau_p_ci2_fs"] = fit.tau_p_ci2 * 1e15
    if sc.mode == "classical" and fit is not None:
        pp, ci = peak_to_peak(trace, "linear", fit)
    else:
        pp, ci = peak_to_peak(trace)
    summary["peak_to_peak"] = pp
    summary["peak_to_peak_ci2"] = ci
    return spec, summary


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_scenario(sc: Scenario | str | Path, out_dir=None, seed=None, workers=None) -> RunResult:
    """Run every sweep point, write traces, spectra, summary and manifest.

    A point that fails numerically is recorded with its error in the
    summary and the sweep continues.
    """
    if not isinstance(sc, Scenario):
        sc = load_scenario(find_scenario(sc))
    if seed is not None:
        sc = replace(sc, seed=int(seed))
        validate_scenario(sc)
    workers = workers or sc.workers
    out = Path(out_dir) if out_dir is not None else Path(sc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    (out / "spectra").mkdir(exist_ok=True)
    material = load_material(sc.material_path())
    values = [None] if sc.sweep_axis == "tau" else list(sc.sweep_values)
    unit = AXIS_UNITS[sc.sweep_axis]
    k_det = _classical_k_det(sc, material) if sc.mode == "classical" else None

    files, points = [], []
    for i, value in enumerate(values):
        pr = PointResult(value)
        try:
            if sc.mode == "classical":
                trace = _run_classical(sc, material, value, k_det)
            else:
                trace = _run_correlation(sc, material, value, i, workers)
            spec, summ = _analyse(sc, trace)
            pr.trace, pr.spectrum, pr.summary = trace, spec, summ
            stem = f"point_{i:03d}"
            for sub, obj in (("traces", trace), ("spectra", spec)):
                p = out / sub / f"{stem}.csv"
                obj.to_csv(p)
                files.append(p)
                if sub == "traces":
                    files.append(p.with_suffix(".json"))
        except (QuadratureError, DomainError, np.linalg.LinAlgError, ValueError,
                RuntimeError) as exc:
            pr.status = f"failed: {type(exc).__name__}: {exc}"
        points.append(pr)

    summary = {
        "scenario": sc.name, "mode": sc.mode, "sweep_axis": sc.sweep_axis,
        "sweep_unit": unit, "seed": sc.seed,
        "units": {"classical": "V"}.get(sc.mode, "V^2/m^2"),
        "points": [{"index": i, "value": p.value, "status": p.status, **p.summary}
                   for i, p in enumerate(points)],
    }
    if sc.mode != "classical":
        summary["referencing_convention"] = "factor 2 of the difference estimator divided out"
    sp = out / "summary.json"
    dump_json(sp, summary)
    files.append(sp)
    cfg = out / "scenario.ini"
    cfg.write_text(dumps_scenario(sc))
    files.append(cfg)

    manifest = {
        "scenario": sc.name, "config_sha256": sc.hash(), "seed": sc.seed,
        "material_sha256": material.digest(),
        "versions": {"eocorr": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "files": {str(p.relative_to(out)).replace("\\", "/"): _sha256(p) for p in files},
        "status": "ok" if all(p.status == "ok" for p in points) else "numerical_failure",
    }
    dump_json(out / "manifest.json", manifest)
    return RunResult(sc, out, points, files)
