"""Acceptance bookkeeping: one PASS/FAIL line per criterion at the end of the run."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            item.user_properties.append(("criterion", number))
            _criteria.setdefault(number, {"title": title, "ok": True, "ran": False, "notes": []})


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    number = props.get("criterion")
    if number is None:
        return
    entry = _criteria[number]
    if report.when == "call":
        entry["ran"] = True
        if "measured" in props:
            entry["notes"].append(props["measured"])
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        notes = "; ".join(entry["notes"])
        line = f"criterion {number}: {status}  {entry['title']}"
        terminalreporter.write_line(line + (f"  [{notes}]" if notes else ""))
