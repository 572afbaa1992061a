from pathlib import Path

import pytest

from pct.rng import RandomSource

DATA = Path(__file__).parent / "data"
CORPUS = Path(__file__).resolve().parents[1] / "src" / "pct" / "corpus"

_criteria: list[tuple[str, bool, str]] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    _criteria.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _criteria:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return RandomSource(0)


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def corpus_dir():
    return CORPUS
