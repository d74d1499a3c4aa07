import numpy as np
import pytest

from msexpint.grid import build_grids

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        line = f"CRITERION {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grids_16_4():
    return build_grids(16, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
