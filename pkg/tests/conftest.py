import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Verdict lines queued by the acceptance suite (see test_acceptance.py).
# Emitted through the terminal reporter so they survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
