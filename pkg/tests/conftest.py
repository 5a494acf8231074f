import numpy as np
import pytest

from defectiva.simulate import GenConfig, generate, scenario_catalog


@pytest.fixture(scope="session")
def scenario_params():
    return {s.id: s.params for s in scenario_catalog()}


@pytest.fixture(scope="session")
def scenario1_n1000():
    return generate(GenConfig.for_scenario(1, 1000, seed=11))


@pytest.fixture(scope="session")
def scenario1_n500():
    return generate(GenConfig.for_scenario(1, 500, seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Store one acceptance verdict and print it; the caller asserts ``ok`` afterwards."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
