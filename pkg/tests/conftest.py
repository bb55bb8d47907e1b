import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

FIXTURES = ROOT / "fixtures"

_acceptance_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_results:
        terminalreporter.section("acceptance criteria")
        for name, ok in _acceptance_results:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
