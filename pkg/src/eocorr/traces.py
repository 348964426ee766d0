"""Sampled traces and their plain-text serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Sampling grid is empty, non-increasing or non-uniform."""


def check_uniform(x, name="grid", min_points=2):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < min_points:
        raise GridError(f"{name} must be 1-D with at least {min_points} points")
    if not np.all(np.isfinite(x)):
        raise GridError(f"{name} contains non-finite values")
    if x.size > 1:
        step = np.diff(x)
        if np.any(step <= 0):
            raise GridError(f"{name} must be strictly increasing")
        if np.ptp(step) > 1e-6 * abs(step.mean()):
            raise GridError(f"{name} is not uniform")
    return x


def _fmt(v):
    return format(float(v), ".17g")


def write_columns(path, header, columns):
    path = Path(path)
    rows = zip(*[np.asarray(c, dtype=float) for c in columns])
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_columns(path):
    """Return ``(header, columns)`` from a CSV written by :func:`write_columns`."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return header, [data[:, i] for i in range(len(header))]


def dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


@dataclass
class SignalTrace:
    """Balanced-detector output (V) against probe delay (s)."""

    delays: np.ndarray
    values: np.ndarray
    integration_time_per_point: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delays = check_uniform(self.delays, "delays")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.delays.shape or not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite and match the delay grid")

    @property
    def x(self):
        return self.delays

    def to_csv(self, path):
        write_columns(path, ["delay_fs", "signal_V"], [self.delays * 1e15, self.values])
        dump_json(Path(path).with_suffix(".json"),
                  {"integration_time_per_point": self.integration_time_per_point, **self.metadata})


@dataclass
class CorrelationTrace:
    """G1(tau) at fixed separation, in V^2/m^2. ``se`` is the per-point
    standard error when the trace comes from a stochastic estimator."""

    tau: np.ndarray
    values: np.ndarray
    delta_r: float = 0.0
    se: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = check_uniform(self.tau, "tau grid", min_points=1)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.tau.shape or not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite and match the tau grid")
        if self.se is not None:
            self.se = np.asarray(self.se, dtype=float)
            if self.se.shape != self.tau.shape:
                raise ValueError("se must match the tau grid")

    @property
    def x(self):
        return self.tau

    def ci2(self):
        """Half-width of the per-point 2-sigma interval."""
        return None if self.se is None else 2.0 * self.se

    def __add__(self, other: "CorrelationTrace") -> "CorrelationTrace":
        if not np.array_equal(self.tau, other.tau):
            raise GridError("cannot add traces on different tau grids")
        se = None
        if self.se is not None or other.se is not None:
            a = self.se if self.se is not None else 0.0
            b = other.se if other.se is not None else 0.0
            se = np.sqrt(np.square(a) + np.square(b))
        return CorrelationTrace(self.tau, self.values + other.values, self.delta_r, se,
                                {"components": [self.metadata, other.metadata]})

    def to_csv(self, path):
        header = ["tau_fs", "g1_V2_per_m2"]
        cols = [self.tau * 1e15, self.values]
        if self.se is not None:
            header.append("se_V2_per_m2")
            cols.append(self.se)
        write_columns(path, header, cols)
        dump_json(Path(path).with_suffix(".json"), {"delta_r": self.delta_r, **self.metadata})

    @classmethod
    def from_csv(cls, path, delta_r=0.0):
        header, cols = read_columns(path)
        se = cols[2] if len(cols) > 2 else None
        return cls(cols[0] * 1e-15, cols[1], delta_r, se)
