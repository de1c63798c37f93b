import os
from pathlib import Path

import pytest

from xprecode.pair_opt import cached_table

TABLE_DIR = Path(os.environ.get("XPRECODE_TABLE_DIR") or Path(__file__).resolve().parents[1] / "tables")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def table_qam4():
    return cached_table(TABLE_DIR, "qam4")


@pytest.fixture(scope="session")
def table_qam16():
    return cached_table(TABLE_DIR, "qam16")


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
