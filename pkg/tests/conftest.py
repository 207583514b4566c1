"""Shared test plumbing: the acceptance summary printed after the run."""

_acceptance_results = []


def record_acceptance(number: int, name: str, passed: bool, detail: str = "") -> None:
    _acceptance_results.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_acceptance_results):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2} [{status}] {name}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)
