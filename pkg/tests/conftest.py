import numpy as np
import pytest

# Lines recorded by the acceptance tests; echoed after the run so the
# per-criterion outcomes are visible in plain `pytest -v` output.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion_log():
    def record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
