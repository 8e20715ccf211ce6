import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

GATE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if GATE:
        terminalreporter.section("acceptance gate")
        for line in sorted(GATE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
