"""Shared pytest configuration.

Collects the acceptance-criterion verdicts recorded by test_acceptance.py
and prints one PASS/FAIL line per criterion at the end of the run, so the
summary survives output capture.
"""

ACCEPTANCE_RESULTS: dict[int, str] = {}


def record_acceptance(number: int, verdict: str, detail: str = "") -> None:
    line = f"ACCEPTANCE {number}: {verdict}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_RESULTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
