import numpy as np
import pytest

from tierbid.core_model import FileSpec, Scenario, SystemConfig


def make_files(sizes, bids=None):
    bids = [0.0] * len(sizes) if bids is None else bids
    return [FileSpec(i, float(s), float(b)) for i, (s, b) in enumerate(zip(sizes, bids))]


def make_scenario(q, lat_ms, lam, p=1.0, index=0):
    return Scenario(index, p, np.asarray(q, float), np.asarray(lat_ms, float),
                    np.asarray(lam, float))


@pytest.fixture
def base_cfg():
    return SystemConfig()


# one PASS/FAIL line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
