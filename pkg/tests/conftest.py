import warnings

from melodyga.notation import UnknownHeaderWarning

ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    warnings.filterwarnings("ignore", category=UnknownHeaderWarning)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
