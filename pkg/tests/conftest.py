import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Store one ``CRITERION k: PASS/FAIL`` line for the end-of-run summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(line):
        print(line)
        lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
