"""Shared pytest hooks.

The acceptance module records one verdict line per criterion through the
``criterion`` fixture; the lines are echoed in the terminal summary so they
survive output capture.
"""

import pytest

_VERDICTS = []


@pytest.fixture
def criterion():
    def record(label, passed, detail=""):
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'}" + (f"  ({detail})" if detail else "")
        _VERDICTS.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
