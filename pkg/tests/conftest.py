"""Shared fixtures: cached preset runs and the acceptance scoreboard."""

import functools

import pytest

from optosync.scenarios import preset, run_scenario

_SCOREBOARD: list[tuple[str, bool, str]] = []


@functools.lru_cache(maxsize=None)
def cached_report(name: str):
    """One run per preset per session; trajectories are dropped to save memory."""
    return run_scenario(preset(name), keep_trajectory=False)


@pytest.fixture(scope="session")
def preset_report():
    return cached_report


@pytest.fixture(scope="session")
def scoreboard():
    def record(label: str, passed: bool, detail: str = ""):
        _SCOREBOARD.append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _SCOREBOARD:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _SCOREBOARD:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
