import numpy as np
import pytest

from grouptest import TestDesign


def random_design(rng, n, T, include_prob=0.3):
    """Random incidence design for oracle cross-checks (independent of the
    package's own design constructors)."""
    mask = rng.random((T, n)) < include_prob
    return TestDesign(n, [list(np.flatnonzero(row)) for row in mask])


def random_design_min2(rng, n, T, lo=2, hi=None):
    """Random design whose every test has between lo and hi items."""
    hi = hi if hi is not None else max(lo, n // 2 + 1)
    tests = []
    for _ in range(T):
        size = int(rng.integers(lo, hi + 1))
        tests.append(list(rng.choice(n, size=size, replace=False)))
    return TestDesign(n, tests)


def iid_subset_masses(n, p):
    """All 2^n subsets with their iid(p) prior masses."""
    out = []
    for mask in range(1 << n):
        members = frozenset(i for i in range(n) if (mask >> i) & 1)
        out.append((members, p ** len(members) * (1 - p) ** (n - len(members))))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" in rep.nodeid and getattr(rep, "when", None) == "call":
                rows.append((rep.nodeid.split("::")[-1], verdict))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in sorted(rows):
            terminalreporter.write_line(f"{verdict}  {name}")
