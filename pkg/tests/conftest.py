from __future__ import annotations

import pytest

from channel_islands.geometry import BoundaryShape, FourierSeries
from channel_islands.harness import prepare
from channel_islands.nonlinearity import Nonlinearity

COUETTE = Nonlinearity.constant(-1.0)
SINE_F = Nonlinearity(poly=(-1.0,), sines=((0.3, 1.0, 0.0),))


def cos_shape(k: int = 1, g=None) -> BoundaryShape:
    return BoundaryShape.flat(h=FourierSeries.cosine(k), g=g)


@pytest.fixture(scope="session")
def couette_base():
    """F = -1, h = cos x, g = 0 on the 128x129 grid."""
    return prepare(cos_shape(1), COUETTE, 128, 129)


@pytest.fixture(scope="session")
def sine_base():
    return prepare(cos_shape(1), SINE_F, 64, 65)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
