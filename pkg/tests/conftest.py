import os
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings

from realradical.extract import extract_from_moments
from realradical.polysys import PolySystem
from realradical.sdp import build_problem, solve_feasible_max_rank

settings.register_profile("default", deadline=None, max_examples=40)
settings.register_profile("ci", deadline=None, max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SYSTEMS = {
    "ex11": (["x1^3 + x1"], ["x1"], []),
    "ex12": (["x1^2 + x2^2"], ["x1", "x2"], []),
    "empty": (["x1^2 + 1"], ["x1"], []),
    "cox3": (["x1*x2^4 + 3*x1^3 - x2^4 - 3*x1^2", "x1^2*x2 - 2*x1^2",
              "2*x1*x2^4 - x1^3 - 2*x2^4 + x1^2"], ["x1", "x2"], []),
    "gauss": (["x1 + x2 - 2", "x1*x3 + x2*x4", "x1*x3^2 + x2*x4^2 - 2/3", "x1*x3^3 + x2*x4^3"],
              ["x1", "x2", "x3", "x4"],
              [f"1 {s} x{i}" for i in range(1, 5) for s in "-+"]),
    "twopoint": (["x1^2 - 3*x1 + 2", "x2 - x1"], ["x1", "x2"], []),
}


def system(name) -> PolySystem:
    eqs, names, ineqs = SYSTEMS[name]
    return PolySystem.from_strings(eqs, names, ineqs)


@lru_cache(maxsize=None)
def solved(name, t):
    """``(system, outcome)`` for a corpus-style instance, cached across tests."""
    sysm = system(name)
    return sysm, solve_feasible_max_rank(build_problem(sysm, t))


@lru_cache(maxsize=None)
def extracted(name, t, method="monomial"):
    sysm, out = solved(name, t)
    return extract_from_moments(out.y, sysm, method)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            if outcome != "skipped" and rep.when != "call":
                continue
            name = nodeid.split("::", 1)[1]
            num = int(name.split("_")[2])
            verdict = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
            lines.append((num, f"{verdict} criterion {num}: {name}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
