from __future__ import annotations

import numpy as np
import pytest

from mallga.model import MallInstance


def make_instance(area_of_location, num_types=2, *, tmin=None, ideal=None, tmax=None, rate=None,
                  fixed=None, attract=None, groups=(), caps=(100, 100, 100), synergy=0.2, floor=0.8):
    """Hand-built instance with friendly defaults (every bound 1..1..num_locations)."""
    area = np.asarray(area_of_location)
    K = int(area.max()) + 1
    T = num_types
    n = len(area)
    return MallInstance(
        area_of_location=area,
        area_attractiveness=np.ones(K) if attract is None else attract,
        type_min=np.ones(T, int) if tmin is None else tmin,
        type_ideal=np.ones(T, int) if ideal is None else ideal,
        type_max=np.full(T, n) if tmax is None else tmax,
        type_sales_rate=np.full(T, 10.0) if rate is None else rate,
        fixed_rent=np.zeros((T, K)) if fixed is None else fixed,
        groups=groups,
        max_small=caps[0], max_medium=caps[1], max_large=caps[2],
        synergy_multiplier=synergy, count_factor_floor=floor,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
