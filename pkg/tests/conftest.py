from contextlib import contextmanager

import pytest

ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary table."""

    @contextmanager
    def run(name):
        outcome = {"ok": False, "detail": "no result recorded"}

        def rec(ok, detail):
            outcome["ok"] = bool(ok)
            outcome["detail"] = detail

        try:
            yield rec
        except Exception as exc:
            ACCEPTANCE.append((name, False, f"exception: {exc!r}"))
            raise
        ACCEPTANCE.append((name, outcome["ok"], outcome["detail"]))
        assert outcome["ok"], f"{name}: {outcome['detail']}"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name} -- {detail}")
