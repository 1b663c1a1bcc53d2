import numpy as np
import pytest

from ecovedge.config import paper_preset, tiny_preset
from ecovedge.env import Environment


@pytest.fixture
def paper():
    return paper_preset()


@pytest.fixture
def tiny():
    return tiny_preset()


@pytest.fixture(scope="session")
def tiny_env():
    return Environment(tiny_preset())


@pytest.fixture(scope="session")
def paper_env():
    return Environment(paper_preset())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_log():
    def log(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
