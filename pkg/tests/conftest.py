from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def curves_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "curves"


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import OUTCOMES

    if OUTCOMES:
        terminalreporter.section("acceptance criteria")
        for o in sorted(OUTCOMES, key=lambda o: o.number):
            terminalreporter.write_line(o.line())
