"""Shared test plumbing: the acceptance-criteria summary hook."""

from __future__ import annotations

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(num: int, ok: bool, detail: str) -> None:
    """Log one acceptance criterion outcome for the terminal summary."""
    ACCEPTANCE[num] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {word}  {detail}")
