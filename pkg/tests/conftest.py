import pytest

# criterion number -> list of (part, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
N_CRITERIA = 11


@pytest.fixture
def record():
    def _record(num, part, passed, detail=""):
        ACCEPTANCE.setdefault(num, []).append((part, bool(passed), detail))
        print(f"criterion {num} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in range(1, N_CRITERIA + 1):
        parts = ACCEPTANCE.get(num)
        if not parts:
            tr.write_line(f"criterion {num:2d}: FAIL (not run)")
            continue
        ok = all(p[1] for p in parts)
        shown = parts if ok else [p for p in parts if not p[1]]
        tail = " -- " + "; ".join(f"{p[0]}: {p[2]}" for p in shown)
        tr.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}{tail}")
