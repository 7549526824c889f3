from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from kitchenqd.sim import load_layout  # noqa: E402

# (name, passed, detail); passed is None for a skipped criterion.
ACCEPTANCE_RESULTS: list[tuple[str, bool | None, str]] = []


@pytest.fixture(scope="session")
def layouts():
    return {name: load_layout(name) for name in ("open", "ring", "hallway", "forced")}


@pytest.fixture
def open_layout(layouts):
    return layouts["open"]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        tag = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{tag}  {name}  {detail}")
