import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# filled by tests/test_acceptance.py, printed after the run
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
