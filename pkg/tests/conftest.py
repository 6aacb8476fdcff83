import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_test_image(h=64, w=64):
    """Disc on a gradient background plus a soft stripe, values inside 0-255."""
    yy, xx = np.mgrid[0:h, 0:w]
    img = 40.0 + 1.5 * xx + np.where((xx - w / 2) ** 2 + (yy - h / 2) ** 2 < (h / 4) ** 2, 90.0, 0.0)
    img += 20.0 * np.sin(yy / 5.0)
    return np.clip(img, 0, 255)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL/SKIP line per acceptance criterion."""

    def record(number, status, detail):
        line = f"criterion {number:>2}: {status} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
