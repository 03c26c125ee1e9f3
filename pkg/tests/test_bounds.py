from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from emclab.certify.bounds import (
    GAMMA_MAX, asymptotic_densities, bincoeff_inequality_check, crossover_gamma, density_crossover,
    density_crossover_float, dirac_gamma_search, dirac_grid, dirac_value, extend_bound,
    extension_identity, falling_ratio, frankl_bound, han_bound, kneser_coefficient,
    limit_coefficients, samuels_argmax, samuels_rhs, samuels_terms, universal_bounds,
)
from emclab.combinatorics import binom, conjectured_m, size_A0
from emclab.errors import PreconditionError
from emclab.family import Params


# ── falling products ────────────────────────────────────────────────────────

def test_bincoeff_example():
    assert bincoeff_inequality_check(10, 10, 3, 3)
    assert falling_ratio(10, 10, 3, 3) == Fraction(9 * 8 * 7 * 9 * 8 * 7, 19 * 18 * 17 * 16 * 15 * 14)


def test_bincoeff_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        k1, k2 = int(rng.integers(0, 6)), int(rng.integers(0, 6))
        a = k1 + Fraction(int(rng.integers(1, 400)), int(rng.integers(1, 20)))
        b = k2 + Fraction(int(rng.integers(1, 400)), int(rng.integers(1, 20)))
        assert bincoeff_inequality_check(a, b, k1, k2)


def test_bincoeff_trivial_exponents():
    assert falling_ratio(5, 7, 0, 0) == 1
    assert bincoeff_inequality_check(5, 7, 0, 2) and bincoeff_inequality_check(5, 7, 2, 0)
    with pytest.raises(PreconditionError):
        bincoeff_inequality_check(0, 3, 1, 1)
    with pytest.raises(PreconditionError):
        bincoeff_inequality_check(3, 3, -1, 1)


# ── bound registry ──────────────────────────────────────────────────────────

@pytest.mark.parametrize("k,s", [(2, 1), (2, 3), (3, 2), (4, 1), (5, 3)])
def test_frankl_bound_at_smallest_n(k, s):
    # at n = k(s+1), s·C(n-1,k-1) = C(n,k)·s/(s+1) and the lower construction is C(n-1,k)
    n = k * (s + 1)
    assert frankl_bound(Params(n, k, s)) == Fraction(s, s + 1) * binom(n, k)
    assert size_A0(k, s) == binom(n - 1, k)


def test_kneser_coefficient_at_five_thirds():
    # (γ-1)/2 · (5k-2)/(γk-γ+1) collapses to 1 at γ = 5/3
    for k in range(2, 40):
        assert kneser_coefficient(GAMMA_MAX, k) == 1
    assert kneser_coefficient(Fraction(6, 5), 3) == Fraction(1, 10) * 13 / Fraction(17, 5)


def _grid():
    for k in (2, 3, 4):
        for s in (1, 2, 3, 5, 8):
            for n in range(k * (s + 1), k * (s + 1) + 3 * k * s, max(1, s)):
                yield Params(n, k, s)


def test_rigorous_bounds_above_conjectured():
    gammas = [Fraction(11, 10), Fraction(4, 3), Fraction(3, 2), GAMMA_MAX]
    count = 0
    for p in _grid():
        rep = universal_bounds(p, gammas)
        assert rep.all_above_conjectured(rigorous_only=True), rep.as_rows()
        assert rep.conjectured == conjectured_m(p)
        count += 1
    assert count > 50


def test_asymptotic_rows_are_flagged():
    rep = universal_bounds(Params(6, 2, 2), [GAMMA_MAX])
    kn = next(r for r in rep.rows if r.name == "kneser")
    assert kn.asymptotic and kn.applicable and kn.value < rep.conjectured
    assert not next(r for r in rep.rows if r.name == "han").asymptotic
    assert rep.minimum(rigorous_only=True).value >= rep.conjectured


def test_han_bound_coefficient_is_one_at_gamma_one():
    p = Params(20, 3, 2)
    assert han_bound(p, 1) == binom(20, 3) - binom(18, 3) + 2 * binom(17, 2)


# ── crossover of the limiting coefficients ─────────────────────────────────

def test_crossover_limit_is_four_thirds():
    assert crossover_gamma() == Fraction(4, 3)
    h, kn = limit_coefficients(Fraction(4, 3), 10**9)
    assert abs(float(h - kn)) < 1e-8


def test_crossover_trend():
    g10 = crossover_gamma(10)
    assert abs(float(g10) - 1.393) < 2e-3
    g50, g1000 = crossover_gamma(50), crossover_gamma(1000)
    assert g10 > g50 > g1000 > Fraction(4, 3)
    assert abs(float(g1000) - 4 / 3) < 1e-3
    assert crossover_gamma(2) is None and crossover_gamma(3) is None


def test_crossover_separates_regimes():
    k = 20
    g = crossover_gamma(k)
    h, kn = limit_coefficients(g + Fraction(1, 100), k)
    assert kn > h
    h, kn = limit_coefficients(g - Fraction(1, 100), k)
    assert kn < h


# ── convex extension ────────────────────────────────────────────────────────

def test_extend_bound_endpoints():
    assert extend_bound(Fraction(1, 10), Fraction(1, 3), Fraction(1, 10), 4) == Fraction(1, 3)
    assert extend_bound(Fraction(1, 10), Fraction(1, 3), Fraction(1, 4), 4) == 1
    with pytest.raises(PreconditionError):
        extend_bound(Fraction(1, 3), Fraction(1, 2), Fraction(1, 2), 3)
    with pytest.raises(PreconditionError):
        extend_bound(Fraction(1, 10), 1, Fraction(1, 5), 3)


def test_extension_identity_grid():
    for k in range(2, 25):
        for g in (Fraction(101, 100), Fraction(6, 5), Fraction(4, 3), Fraction(3, 2), GAMMA_MAX):
            for rho in (Fraction(1, 7), Fraction(1, 2), Fraction(9, 10)):
                assert extension_identity(g, k, rho)


# ── minimum-degree search ───────────────────────────────────────────────────

@pytest.mark.parametrize("k", [3, 5, 10, 40])
def test_dirac_strongest_degree_succeeds(k):
    r = dirac_gamma_search(k, k - 1)
    assert r is not None and r.gamma == GAMMA_MAX and r.value >= Fraction(1, 2)


def test_dirac_weak_degree_fails_for_large_k():
    assert dirac_gamma_search(200, 1) is None
    assert dirac_gamma_search(1000, 1) is None


@pytest.mark.parametrize("k", [8, 16, 24, 64, 256, 1000])
def test_dirac_three_eighths(k):
    d = math.ceil(3 * k / 8)
    r = dirac_gamma_search(k, d)
    assert r is not None and r.value >= Fraction(1, 2) and r.degree_margin > 0
    assert r.exact == (k <= 256)
    if r.exact:
        assert r.value == dirac_value(r.gamma, k, d)


def test_dirac_k2_is_equality():
    r = dirac_gamma_search(2, 1)
    assert r.gamma == GAMMA_MAX and r.value == Fraction(1, 2)


def test_dirac_grid_and_preconditions():
    rows = dirac_grid([2, 3, 8, 17])
    assert [(k, d) for k, d, _ in rows] == [(2, 1), (3, 2), (8, 3), (17, 7)]
    assert all(r is not None for _, _, r in rows)
    with pytest.raises(PreconditionError):
        dirac_gamma_search(5, 5)


# ── limiting densities ──────────────────────────────────────────────────────

def test_asymptotic_densities_values():
    a, b = asymptotic_densities(3, Fraction(1, 3))
    assert a == 1 - Fraction(8, 27) and b == 1
    with pytest.raises(PreconditionError):
        asymptotic_densities(3, Fraction(1, 2))


def test_samuels_terms():
    xs = [Fraction(1, 10)] * 4
    terms = samuels_terms(xs)
    assert terms[0] == 1 - Fraction(9, 10) ** 4
    assert samuels_argmax(xs) == 0 and samuels_rhs(xs) == terms[0]
    with pytest.raises(PreconditionError):
        samuels_terms([Fraction(1, 2), Fraction(1, 2)])


def test_density_crossover_against_mpmath():
    lo, hi = density_crossover(3)
    assert hi - lo <= Fraction(1, 10**12)
    with mpmath.workdps(30):
        root = mpmath.findroot(lambda x: 1 - (1 - x) ** 3 - (3 * x) ** 3, 0.28)
        assert abs(density_crossover_float(3) - float(root)) < 1e-12
    assert abs(density_crossover_float(3) - 0.2868552474454494) < 1e-12
