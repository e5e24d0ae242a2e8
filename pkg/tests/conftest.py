import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent
MUTAG_DIR = Path(os.environ.get("MUTAG_DIR", ROOT / "data" / "MUTAG"))


def require_mutag() -> Path:
    """MUTAG location; acceptance checks fail (never skip) when it is missing."""
    if not (MUTAG_DIR / "MUTAG_A.txt").is_file():
        pytest.fail(
            f"MUTAG not found at {MUTAG_DIR}; download the TU MUTAG files and set MUTAG_DIR",
            pytrace=False,
        )
    return MUTAG_DIR


_results: dict[int, dict] = {}


def _entry(number, title):
    return _results.setdefault(number, {"title": title, "passed": 0, "failed": [], "notes": []})


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion summary line of the current test."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str) -> None:
        if marker is not None:
            _entry(*marker.args)["notes"].append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _entry(number, title)
    if report.when == "call" and report.passed:
        entry["passed"] += 1
    elif report.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        ok = not entry["failed"] and entry["passed"] > 0
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(sorted(set(entry['failed'])))})"
        terminalreporter.write_line(line)
        for text in entry["notes"]:
            terminalreporter.write_line(f"             {text}")
