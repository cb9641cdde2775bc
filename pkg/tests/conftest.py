from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tgwcrt import load_system  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def fixture_model():
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_system(FIXTURES / f"{name}.json")
        return cache[name]
    return get


@pytest.fixture
def record():
    def put(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[criterion] = (passed, detail)
    return put


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
