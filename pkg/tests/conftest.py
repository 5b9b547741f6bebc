import numpy as np
import pytest

from hadamard import manifold as mf


@pytest.fixture
def H():
    return mf.half_plane()


@pytest.fixture
def D():
    return mf.disk()


@pytest.fixture
def E():
    return mf.euclidean()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
