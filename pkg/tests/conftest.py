import pytest

LOG_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[LOG_KEY] = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash[LOG_KEY]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(LOG_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
