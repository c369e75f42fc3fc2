import math

import pytest

from twinfuse.model import Reading, SensorKind, UniformTrace


def make_trace(values, start=0, interval_s=60, sensor_id="s0", kind=SensorKind.SYNTHETIC):
    """Build a trace from floats; None marks an absent reading."""
    readings = tuple(
        Reading.absent() if v is None else Reading.of(v) for v in values
    )
    return UniformTrace(sensor_id, kind, start, interval_s, readings)


def constant_trace(value, length, **kwargs):
    return make_trace([value] * length, **kwargs)


@pytest.fixture
def paper_window_clean():
    """The documented clean first-cycle window."""
    from twinfuse.model import TriadWindow

    rows = ((7, 8, 8, 7, 6), (6, 7, 8, 8, 7), (7, 6, 7, 8, 8))
    return TriadWindow(
        timestamps=(0, 60, 120, 180, 240),
        rows=tuple(tuple(Reading.of(v) for v in row) for row in rows),
    )


@pytest.fixture
def paper_window_faulted():
    """The documented second-cycle window with sensor 2 reading zeros."""
    from twinfuse.model import TriadWindow

    rows = ((7, 8, 8, 7, 6), (6, 0, 0, 8, 7), (7, 6, 7, 8, 8))
    return TriadWindow(
        timestamps=(300, 360, 420, 480, 540),
        rows=tuple(tuple(Reading.of(v) for v in row) for row in rows),
    )


def assert_close(a, b, tol=1e-9):
    assert math.isfinite(a) and math.isfinite(b)
    assert abs(a - b) <= tol, f"{a} != {b} within {tol}"
