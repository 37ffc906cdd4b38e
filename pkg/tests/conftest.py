import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def record(request):
    """Record one acceptance line, then assert it passed."""
    lines = request.config.stash.setdefault(_LINES, [])

    def _record(tag: str, ok: bool, detail: str):
        lines.append(f"{'PASS' if ok else 'FAIL'} {tag}: {detail}")
        print(lines[-1])
        assert ok, detail

    return _record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
