import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one acceptance line; the terminal summary repeats them all."""

    def _record(number, title, passed, detail, seconds, limit):
        within = seconds < limit
        status = "PASS" if passed and within else "FAIL"
        line = (f"[{status}] criterion {number:>2} {title}: {detail}; "
                f"{seconds:.2f}s (limit {limit:g}s)")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed and within

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
