import math

import pytest

from conebvp.assembly import Kind
from conebvp.domainmesh import ConeSpec, Side
from conebvp.verify import GraphSpec, Problem

ALPHA = math.pi / 3


@pytest.fixture
def serrin_cap():
    return Problem(1, Kind.SERRIN, ConeSpec(0.0, ALPHA, Side.INTERIOR), GraphSpec("CONSTANT", 0.8))


@pytest.fixture
def molzon_cap():
    return Problem(1, Kind.MOLZON, ConeSpec(0.0, ALPHA, Side.INTERIOR), GraphSpec("CONSTANT", 0.8))


def bisect(f, a, b, tol=1e-14):
    """Plain bisection; f(a) and f(b) must differ in sign."""
    fa = f(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
