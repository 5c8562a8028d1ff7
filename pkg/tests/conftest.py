import contextlib

import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.fixture
def criterion(request):
    """Context manager factory that records a named acceptance criterion."""
    results = request.config.stash[_RESULTS_KEY]

    @contextlib.contextmanager
    def check(name):
        try:
            yield
        except BaseException as exc:
            results.append((name, False, str(exc).splitlines()[0] if str(exc) else type(exc).__name__))
            raise
        results.append((name, True, ""))

    return check


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
