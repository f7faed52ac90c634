"""Shared acceptance-report plumbing.

Acceptance tests register one PASS/FAIL line per criterion; the lines are
echoed in the terminal summary so the verdicts survive output capture.
"""

_CRITERION_LINES: dict[str, str] = {}


def record_criterion(label: str, description: str, ok: bool) -> bool:
    line = f"CRITERION {label}: {'PASS' if ok else 'FAIL'} - {description}"
    _CRITERION_LINES[label] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[label])
