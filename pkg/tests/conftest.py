import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roadreq.requirements import road_requirements  # noqa: E402


@pytest.fixture(scope="session")
def road():
    return road_requirements()


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert."""

    def record(number, ok, detail):
        line = f"[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE.append(line)
        capman = request.config.pluginmanager.getplugin("capturemanager")
        with capman.global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
