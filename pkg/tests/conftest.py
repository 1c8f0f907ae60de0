"""Shared fixtures and the acceptance summary table.

Acceptance tests register one verdict each through the ``criterion`` fixture;
the terminal summary prints one line per registered criterion so a full run
ends with a compact scoreboard.
"""

import numpy as np
import pytest

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record a criterion verdict and fail the test if it did not hold."""

    def _record(num: int, title: str, passed: bool, detail: str = ""):
        _CRITERIA[num] = (title, bool(passed), detail)
        assert passed, f"criterion {num} ({title}) failed: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[num]
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {num:2d}  {verdict}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
