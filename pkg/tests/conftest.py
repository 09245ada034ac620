from __future__ import annotations

import random

import pytest

@pytest.fixture
def rng():
    return random.Random(20221231)


_results: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number, text = marker.args
        _results.append((str(number), "PASS" if rep.passed else "FAIL", f"{text} [{item.name}]"))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, text in sorted(_results, key=lambda r: (int(r[0].rstrip("abcdefgh")), r[0])):
        terminalreporter.write_line(f"criterion {number:<3} {status}  {text}")
