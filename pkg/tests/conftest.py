import pytest

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        outcome = "PASS" if report.passed else "FAIL"
        _criteria[props["criterion"]] = (outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcome, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {outcome}  {detail}")


@pytest.fixture
def criterion(record_property):
    """``criterion(n, ok, detail)`` records one acceptance line, then asserts."""

    def check(n: int, ok: bool, detail: str) -> None:
        record_property("criterion", n)
        record_property("detail", detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return check
