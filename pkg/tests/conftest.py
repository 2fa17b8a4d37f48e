"""Shared pytest hooks: per-criterion acceptance summary."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_RESULTS: dict = {}  # number -> [name, passed, notes]


def _entry(item):
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return None
    number, name = mark.args
    return _RESULTS.setdefault(number, [name, True, []])


@pytest.fixture
def acceptance_note(request):
    """Attach a short measured-value note to the test's acceptance line."""
    entry = _entry(request.node)

    def note(text):
        if entry is not None:
            entry[2].append(str(text))

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _entry(item)
    if entry is not None and (rep.failed or (rep.when == "call" and rep.skipped)):
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        name, ok, notes = _RESULTS[number]
        line = f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
