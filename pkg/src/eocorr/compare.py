"""Pointwise comparison of two trace CSV files."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .traces import GridError, read_columns


@dataclass(frozen=True)
class Tolerance:
    """Pass when every bound that is set holds.

    ``rms_se_factor`` bounds the RMS difference by that multiple of the
    mean standard error found in either file's third column.
    """

    atol: float | None = None
    rtol: float | None = None
    rms: float | None = None
    rms_se_factor: float | None = None


@dataclass(frozen=True)
class CompareReport:
    max_abs: float
    rms: float
    n_points: int
    passed: bool
    checks: dict

    def lines(self):
        out = [f"points   {self.n_points}", f"max_abs  {self.max_abs:.6g}", f"rms      {self.rms:.6g}"]
        for name, (limit, ok) in self.checks.items():
            out.append(f"{name:<8} limit {limit:.6g}  {'pass' if ok else 'FAIL'}")
        out.append("PASS" if self.passed else "FAIL")
        return out


def compare_traces(path_a, path_b, tolerance: Tolerance = Tolerance(), interpolate=False):
    """Compare the second column of two CSV traces on their first column."""
    _, a = read_columns(path_a)
    _, b = read_columns(path_b)
    xa, ya, xb, yb = a[0], a[1], b[0], b[1]
    if xa.shape == xb.shape and np.allclose(xa, xb, rtol=0, atol=1e-9 * max(np.ptp(xa), 1.0)):
        yb_on_a = yb
    elif interpolate:
        if xa.min() < xb.min() or xa.max() > xb.max():
            raise GridError("first grid extends beyond the second; cannot interpolate")
        yb_on_a = np.interp(xa, xb, yb)
    else:
        raise GridError("trace grids differ; pass interpolate=True to resample")
    d = ya - yb_on_a
    max_abs = float(np.max(np.abs(d))) if d.size else 0.0
    rms = float(np.sqrt(np.mean(d ** 2))) if d.size else 0.0
    checks = {}
    tol = tolerance
    if tol.atol is not None or tol.rtol is not None:
        lim = (tol.atol or 0.0) + (tol.rtol or 0.0) * np.abs(yb_on_a)
        checks["pointwise"] = (float(np.max(lim)) if np.size(lim) else 0.0, bool(np.all(np.abs(d) <= lim)))
    if tol.rms is not None:
        checks["rms"] = (tol.rms, rms <= tol.rms)
    if tol.rms_se_factor is not None:
        ses = [c[2] for c in (a, b) if len(c) > 2]
        if not ses:
            raise ValueError("rms_se_factor needs a standard-error column in at least one file")
        limit = tol.rms_se_factor * float(np.mean(np.concatenate(ses)))
        checks["rms_se"] = (limit, rms <= limit)
    if not checks:
        checks["exact"] = (0.0, max_abs == 0.0)
    return CompareReport(max_abs, rms, int(d.size), all(ok for _, ok in checks.values()), checks)
