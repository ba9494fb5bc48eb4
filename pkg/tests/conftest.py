import numpy as np
import pytest

from arakelov.surface import EllipticSurface


@pytest.fixture(scope="session")
def square():
    return EllipticSurface(1j)


@pytest.fixture(scope="session")
def tall():
    return EllipticSurface(2j)


@pytest.fixture(scope="session")
def skew():
    return EllipticSurface(0.4 + 1.3j)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in sorted(RESULTS, key=lambda r: int(r.name.split()[0])):
            terminalreporter.write_line(r.line())
