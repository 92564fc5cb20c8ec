import numpy as np
import pytest

from qmealy.circuits import build_state, example1_machine, example2_machine


@pytest.fixture(scope="session")
def ex1():
    spec, m = example1_machine()
    return m, build_state(spec, "00"), build_state(spec, "01")


@pytest.fixture(scope="session")
def ex1_prime():
    spec, m = example1_machine(prime=True)
    return m, build_state(spec, "00"), build_state(spec, "01")


@pytest.fixture(scope="session")
def ex2():
    spec, m = example2_machine()
    return m, build_state(spec, "bell00"), build_state(spec, "bell10")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line, print it, and fail the test if it did not pass."""

    def record(number, title, failures, detail=""):
        status = "PASS" if not failures else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        assert not failures, "; ".join(map(str, failures[:5]))

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
