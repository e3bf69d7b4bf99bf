import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stokeslab.geometry import Disk, DomainMask, Grid, SlitSquare, rasterize

settings.register_profile("default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MIDDLE = SlitSquare((0.0, 0.0), 1.0, (0.25, 0.5), (0.75, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def slit_mask(n):
    return rasterize(MIDDLE, Grid.unit_square(n))


def disk_mask(n, r=0.45):
    return rasterize(Disk((0.5, 0.5), r), Grid.unit_square(n))


def square_mask(n):
    return DomainMask.full(Grid.unit_square(n))


# Acceptance summary ----------------------------------------------------------------
# Tests marked ``criterion(k, title)`` are grouped, and a single PASS/FAIL line per
# criterion is written at the end of the run regardless of output capture.

_CRITERIA: dict[int, dict] = {}
_NOTES: dict[int, list] = {}


@pytest.fixture
def note():
    """``note(k, text)`` attaches a measured value to the summary line of criterion k."""
    return lambda k, text: _NOTES.setdefault(k, []).append(text)


def pytest_runtest_logreport(report):
    info = getattr(report, "criterion", None)
    if info is None:
        return
    k, title = info
    entry = _CRITERIA.setdefault(k, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        e = _CRITERIA[k]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status}  {e['title']}")
        for text in _NOTES.get(k, ()):
            terminalreporter.write_line(f"    {text}")
