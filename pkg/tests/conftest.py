from __future__ import annotations

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from emclab.family import Family, all_kset_masks  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def families(draw, n_max: int = 8, k_max: int = 3, n_min: int = 1):
    """A random k-uniform family on [n]."""
    n = draw(st.integers(n_min, n_max))
    k = draw(st.integers(1, min(k_max, n)))
    allm = all_kset_masks(n, k)
    keep = draw(st.lists(st.booleans(), min_size=len(allm), max_size=len(allm)))
    return Family(n, k, tuple(m for m, b in zip(allm, keep) if b))


def random_family(rng: np.random.Generator, n: int, k: int, density: float | None = None) -> Family:
    allm = all_kset_masks(n, k)
    p = rng.random() if density is None else density
    keep = rng.random(len(allm)) < p
    return Family(n, k, tuple(m for m, b in zip(allm, keep) if b))


def greedy_nu_at_most(rng: np.random.Generator, n: int, k: int, s: int) -> Family:
    """Random maximal-ish family with ν ≤ s: offer sets in random order."""
    from emclab.combinatorics import has_matching
    allm = all_kset_masks(n, k)
    chosen: list[int] = []
    for idx in rng.permutation(len(allm)):
        m = allm[int(idx)]
        if rng.random() < 0.15:
            continue
        if not has_matching(chosen + [m], s + 1, k):
            chosen.append(m)
    return Family(n, k, tuple(chosen))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
CRITERIA: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
