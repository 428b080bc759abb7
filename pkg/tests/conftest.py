import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if acceptance_report.RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in acceptance_report.lines():
            terminalreporter.write_line(line)
