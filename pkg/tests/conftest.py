import re

_results: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"::test_ac(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = f"AC{int(m.group(1)):02d}"
    label = m.group(2).replace("_", " ")
    if report.failed:
        _results[key] = ("FAIL", label)
    elif report.when == "call" and key not in _results:
        _results[key] = ("PASS" if report.passed else "SKIP", label)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results):
        status, label = _results[key]
        terminalreporter.write_line(f"{key} {status:4s} {label}")
    n_pass = sum(s == "PASS" for s, _ in _results.values())
    terminalreporter.write_line(f"{n_pass}/{len(_results)} criteria pass")
