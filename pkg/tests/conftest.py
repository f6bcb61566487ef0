from pathlib import Path

import numpy as np
import pytest

import _acceptance_log

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_log.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_acceptance_log.RESULTS):
        ok, detail = _acceptance_log.RESULTS[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    for text in _acceptance_log.NOTES:
        tr.write_line(f"info: {text}")
