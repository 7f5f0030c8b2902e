"""Shared fixtures: the acceptance result log printed after the run."""

from __future__ import annotations

import pytest

_lines: list[str] = []


@pytest.fixture()
def acceptance_log():
    """Record one pass/fail line per acceptance check; printed at exit."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        line = f"[ACCEPTANCE] {name}: {status}{suffix}"
        _lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus):  # noqa: ARG001
    if _lines:
        terminalreporter.section("acceptance criteria")
        for line in _lines:
            terminalreporter.write_line(line)
