import numpy as np
import pytest

from gkp_kerr.gkp_code import build_code


@pytest.fixture(scope="session")
def code36():
    return build_code(0.36)


@pytest.fixture(scope="session")
def code25():
    return build_code(0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_dm(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per criterion for the terminal summary."""
    lines = request.config.stash.setdefault(CRITERIA, [])

    def report(name: str, status: str, detail: str) -> None:
        line = f"{name} {status}: {detail}"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
