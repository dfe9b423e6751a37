from __future__ import annotations

import pytest

CRITERIA_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def criterion_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(CRITERIA_KEY, [])
    return lines


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
