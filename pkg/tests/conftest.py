import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from acquisition_impact.attribution import instance as instance_mod
from acquisition_impact.attribution.instance import Assignment, AttributionInstance, assignment_violations

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []
SOLVE_COUNT = {"checked": 0}


def pytest_configure(config):
    config.addinivalue_line("markers", "allow_invalid_assignments: skip the per-solve constraint check")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(f"assignments checked for quota/indicator consistency: {SOLVE_COUNT['checked']}")


@pytest.fixture(autouse=True)
def _check_every_assignment(request, monkeypatch):
    """Every Assignment built during a test must satisfy quota equality and
    indicator consistency against the instance it was built for."""
    if request.node.get_closest_marker("allow_invalid_assignments"):
        yield
        return
    original = Assignment.from_pairs.__func__

    def checked(cls, instance, pairs, lam=0.0, **extra):
        a = original(cls, instance, pairs, lam, **extra)
        problems = assignment_violations(instance, a)
        assert not problems, problems
        SOLVE_COUNT["checked"] += 1
        return a

    monkeypatch.setattr(instance_mod.Assignment, "from_pairs", classmethod(checked))
    yield


def random_instance(rng: np.random.Generator, max_subs: int = 10, n_contents: int = 3,
                    max_pairs: int = 25, day: dt.date | None = None) -> AttributionInstance:
    """Feasible random instance within the brute-force size bound."""
    n_subs = int(rng.integers(1, max_subs + 1))
    subs = [f"s{k:02d}" for k in range(n_subs)]
    contents = [f"c{k}" for k in range(n_contents)]
    pairs = [(i, j) for i in subs for j in contents if rng.random() < 0.6]
    if len(pairs) > max_pairs:
        idx = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[k] for k in sorted(idx)]
    aff = {p: float(np.round(rng.uniform(0, 1), 6)) for p in pairs}
    counts = {j: sum(1 for _, c in pairs if c == j) for j in contents}
    quotas = {j: int(rng.integers(0, counts[j] + 1)) for j in contents}
    return AttributionInstance(tuple(pairs), aff, quotas, day)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
