import json
from importlib import resources

import pytest

from irexf.ime import canonical_layout
from irexf.ir_protocol import SignalDatabase

_acceptance_lines = []


@pytest.fixture(scope="session")
def layout():
    return canonical_layout()


@pytest.fixture(scope="session")
def fingerprint_db():
    text = resources.files("irexf.data").joinpath("fingerprints.json").read_text(encoding="utf-8")
    return SignalDatabase.from_dict(json.loads(text))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "acceptance" not in report.keywords:
        return
    doc = dict(report.user_properties).get("criterion", report.nodeid.split("::")[-1])
    status = "PASS" if report.outcome == "passed" else "FAIL"
    _acceptance_lines.append(f"[{status}] {doc}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
