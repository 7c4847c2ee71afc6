import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = []


@pytest.fixture(scope="session")
def hom_ladder_results():
    """Tight successive fits N = 0..6 on the homogeneous disk (shared, fitted once)."""
    from learned_ie.experiments import hom_ladder

    return hom_ladder(6)[2]


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, title, checks, seconds, budget):
        checks = dict(checks)
        checks["runtime"] = (seconds < budget, f"{seconds:.1f}s < {budget:.0f}s")
        ok = all(flag for flag, _ in checks.values())
        detail = "; ".join(f"{name}: {text}" for name, (_, text) in checks.items())
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
        _CRITERIA.append(line)
        print(line)
        failed = [name for name, (flag, _) in checks.items() if not flag]
        assert ok, f"criterion {number} failed checks: {', '.join(failed)}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
