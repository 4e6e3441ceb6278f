import pytest

from distortion_outage import FadingChannel, SystemParams, build_experimental_source, db_to_linear


@pytest.fixture(scope="session")
def rayleigh():
    return FadingChannel.rayleigh()


@pytest.fixture(scope="session")
def g2():
    return build_experimental_source("G2")


@pytest.fixture(scope="session")
def stationary():
    return build_experimental_source("S")


@pytest.fixture(scope="session")
def dm8():
    return db_to_linear(8.0)


@pytest.fixture
def sys_at(dm8):
    def make(p_db, b=1, d_max=None):
        return SystemParams(b, dm8 if d_max is None else d_max, db_to_linear(p_db))
    return make


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
