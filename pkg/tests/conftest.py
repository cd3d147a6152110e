from __future__ import annotations

import pytest

_LINES: list[str] = []


class Acceptance:
    """Collects one PASS/FAIL line per criterion, shown after the run."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title

    def report(self, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {self.number:2d} {self.title}: {detail}"
        _LINES.append(line)
        print(line)
        return passed


@pytest.fixture
def acceptance():
    return Acceptance


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
