from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import families, random_family
from emclab.combinatorics import conjectured_m, matching_number
from emclab.errors import PreconditionError, ScaleLimitError
from emclab.extremal import exact_m
from emclab.family import Family, Params, family_A, full_layer
from emclab.fractional import (
    certificate_json, degree_reduction_check, m_star_degree_small, m_star_small, min_degree,
    nu_star,
)
from emclab.simplex import solve_packing
from oracles import as_sets, lp_nu_star


# ── simplex ─────────────────────────────────────────────────────────────────

def test_simplex_small_packing():
    A = [[1, 1], [1, 3]]
    sol = solve_packing(A, [4, 6], [1, 2])
    assert sol.value == 5 and sol.x == [3, 1]
    assert sol.primal_feasible(A, [4, 6]) and sol.dual_feasible(A, [1, 2])
    assert sum(y * b for y, b in zip(sol.y, [4, 6])) == sol.value


@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_simplex_matches_floating_solver(rows, cols, data):
    A = [[data.draw(st.integers(0, 4)) for _ in range(cols)] for _ in range(rows)]
    b = [data.draw(st.integers(0, 6)) for _ in range(rows)]
    c = [data.draw(st.integers(0, 5)) for _ in range(cols)]
    # keep the LP bounded: every column with positive cost needs a positive row entry
    for j in range(cols):
        if c[j] and not any(A[i][j] for i in range(rows)):
            A[0][j] = 1
    sol = solve_packing(A, b, c)
    assert sol.primal_feasible(A, b) and sol.dual_feasible(A, c)
    assert sum(y * bi for y, bi in zip(sol.y, b)) == sol.value
    ref = linprog(-np.array(c, float), A_ub=np.array(A, float), b_ub=np.array(b, float), method="highs")
    assert abs(float(sol.value) + ref.fun) < 1e-7


def test_simplex_rejects_bad_input():
    with pytest.raises(PreconditionError):
        solve_packing([[1]], [-1], [1])
    with pytest.raises(PreconditionError):
        solve_packing([[1, 2]], [1], [1])


# ── ν* ──────────────────────────────────────────────────────────────────────

def test_nu_star_examples():
    assert nu_star(Family.from_sets(5, 3, [[1, 2, 3]]))[0] == 1
    value, fm, fc = nu_star(Family.from_sets(3, 2, [[1, 2], [2, 3], [1, 3]]))
    assert value == Fraction(3, 2)
    assert set(fm.weights.values()) == {Fraction(1, 2)}
    assert set(fc.vertex_weights.values()) == {Fraction(1, 2)}
    assert nu_star(Family(5, 2, ()))[0] == 0


@pytest.mark.parametrize("n,k,s", [(8, 2, 2), (9, 3, 1), (10, 2, 3), (12, 3, 2)])
def test_nu_star_of_A_is_below_s_plus_one(n, k, s):
    value, fm, fc = nu_star(family_A(n, k, s))
    assert value < s + 1
    assert fm.value == fc.total and fm.is_valid(n) and fc.is_valid(family_A(n, k, s))


@given(families(n_max=8, k_max=3))
def test_nu_star_sandwich_and_duality(f):
    if f.k == 0:
        return
    value, fm, fc = nu_star(f)
    assert fm.value == fc.total == value
    assert matching_number(f) <= value <= Fraction(f.n, f.k)
    assert abs(float(value) - lp_nu_star(as_sets(f), f.n)) < 1e-7


def test_certificate_json_round_trip():
    cert = certificate_json(Family.from_sets(3, 2, [[1, 2], [2, 3], [1, 3]]))
    assert cert["value"] == "3/2" and cert["strong_duality"]
    assert sum(Fraction(m["weight"]) for m in cert["matching"]) == Fraction(3, 2)
    assert sum(Fraction(v) for v in cert["cover"].values()) == Fraction(3, 2)


def test_nu_star_scale_limit():
    with pytest.raises(ScaleLimitError):
        nu_star(full_layer(16, 5))


# ── m* at tiny scale ────────────────────────────────────────────────────────

@pytest.mark.parametrize("n,s", [(4, 2), (6, 3)])
def test_m_star_singletons(n, s):
    assert m_star_small(Params(n, 1, s))[0] == s


def test_m_star_examples():
    best, fam = m_star_small(Params(6, 2, 1))
    assert best == 5 == max(15 - 10, 3)
    assert nu_star(fam)[0] < 2
    best, _ = m_star_small(Params(5, 2, 1))
    assert best == conjectured_m(Params(5, 2, 1)) == 4


@pytest.mark.parametrize("n,k,s", [(4, 2, 1), (5, 2, 1), (6, 2, 1), (6, 2, 2), (6, 3, 1)])
def test_m_star_at_most_m(n, k, s):
    ms, fam = m_star_small(Params(n, k, s))
    assert ms <= exact_m(Params(n, k, s)).optimum
    assert nu_star(fam)[0] < s + 1


def test_m_star_scale_limit():
    with pytest.raises(ScaleLimitError):
        m_star_small(Params(7, 2, 2))


# ── minimum degree and degree reduction ─────────────────────────────────────

def test_min_degree():
    f = family_A(6, 2, 1)
    assert min_degree(f.masks, 6, 1) == 1
    assert min_degree(full_layer(5, 2).masks, 5, 1) == 4


@pytest.mark.parametrize("n,k,s", [(4, 2, 1), (5, 2, 1), (6, 2, 1), (6, 2, 2)])
def test_degree_reduction(n, k, s):
    rep = degree_reduction_check(n, k, s, 1)
    assert rep.holds, rep


def test_degree_reduction_preconditions():
    with pytest.raises(PreconditionError):
        degree_reduction_check(5, 2, 2, 1)
    with pytest.raises(PreconditionError):
        degree_reduction_check(6, 2, 1, 2)


def test_m_star_degree_matches_direct_scan(rng):
    best, fam = m_star_degree_small(5, 2, 1, 1)
    assert min_degree(fam.masks, 5, 1) == best
    for _ in range(30):
        f = random_family(rng, 5, 2)
        if f.masks and nu_star(f)[0] < 2:
            assert min_degree(f.masks, 5, 1) <= best
