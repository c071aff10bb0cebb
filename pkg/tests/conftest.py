import numpy as np
import pytest

from glwire.domain import build_wire_domain, constant_current


@pytest.fixture(scope="session")
def wire32():
    """1 x 2 wire, h = 1/32, J0 = 4 on both contacts."""
    dom, grid = build_wire_domain(1.0, 2.0, 33, 65)
    return dom, grid, constant_current(4.0)


def rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record a PASS/FAIL line for the terminal summary and return the flag."""
    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
