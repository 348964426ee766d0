"""Shared fixtures and the acceptance summary printed after the run."""

import pytest

from eocorr.kerr import KerrModelParams
from eocorr.physics import default_material

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n = mark.args[0]
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = _CRITERIA.get(n, (True, []))
    notes = prev[1] + list(getattr(item, "_criterion_notes", []))
    if rep.when == "call" or not ok:
        _CRITERIA[n] = (prev[0] and ok, notes)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, notes = _CRITERIA[n]
        tr.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  " + "; ".join(notes))


@pytest.fixture
def note(request):
    """Attach a short measured value to the acceptance line of this test."""
    request.node._criterion_notes = []
    return request.node._criterion_notes.append


@pytest.fixture(scope="session")
def material():
    return default_material()


@pytest.fixture(scope="session")
def kerr_params():
    return KerrModelParams()


@pytest.fixture(scope="session")
def ref_pair(kerr_params):
    return kerr_params.reference_pair()


@pytest.fixture(scope="session")
def ref_geometry(kerr_params, material):
    return kerr_params.reference_geometry(material)
