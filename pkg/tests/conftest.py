import os

import pytest


@pytest.fixture(scope="session", autouse=True)
def _reference_cache(tmp_path_factory):
    """Keep reference solutions out of the user's cache directory."""
    if "ONESTEP_CACHE" not in os.environ:
        os.environ["ONESTEP_CACHE"] = str(tmp_path_factory.mktemp("reference-cache"))
    yield


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
