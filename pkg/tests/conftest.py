from pathlib import Path

import numpy as np
import pytest

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# mean signal counts user -> sector for the three dominating PMTs, rows are sectors
PMT_GAINS = np.array(
    [
        [1.0491, 3.2533, 9.6285, 20.8329],
        [9.7798, 3.1585, 37.3374, 22.3473],
        [37.1711, 43.1114, 1.0340, 1.0000],
    ]
)

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: str, ok: bool, detail: str):
        line = f"criterion {criterion:<3} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)


@pytest.fixture
def pmt_gains():
    return PMT_GAINS.copy()


@pytest.fixture
def configs_dir():
    return CONFIGS
