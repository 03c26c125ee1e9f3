from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from conftest import random_family
from emclab.combinatorics import binom
from emclab.errors import PreconditionError
from emclab.family import Family, family_A, full_layer
from emclab.kneser import check_alon_chung, induced_edges, kneser_params, ratio_below_reciprocal
from oracles import as_sets, brute_edges, second_abs_eigenvalue, spectrum_oracle


def test_petersen_parameters():
    kp = kneser_params(5, 2)
    assert (kp.M, kp.D, kp.lam) == (10, 3, 2)
    ev = spectrum_oracle(5, 2)
    assert np.allclose(ev, sorted([3] + [1] * 5 + [-2] * 4), atol=1e-6)


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_perfect_matching_kneser_graph(l):
    kp = kneser_params(2 * l, l)
    assert kp.D == 1
    ev = spectrum_oracle(2 * l, l)
    assert np.allclose(np.abs(ev), 1.0, atol=1e-9)


def test_ratio_formula():
    kp = kneser_params(8, 2)
    assert kp.ratio == Fraction(2, 6)
    assert abs(second_abs_eigenvalue(8, 2) / kp.D - 2 / 6) < 1e-9
    assert abs(second_abs_eigenvalue(7, 2) - 4) < 1e-6 and kneser_params(7, 2).lam == 4


@pytest.mark.parametrize("m,l", [(m, l) for l in (1, 2, 3) for m in range(2 * l + 1, 13)])
def test_lambda_matches_dense_spectrum(m, l):
    kp = kneser_params(m, l)
    assert abs(second_abs_eigenvalue(m, l) - kp.lam) < 1e-6
    assert kp.ratio == Fraction(l, m - l)


def test_kneser_params_rejects_small_m():
    with pytest.raises(PreconditionError):
        kneser_params(5, 3)


@pytest.mark.parametrize("m,l", [(9, 3), (10, 2), (12, 4)])
def test_ratio_below_reciprocal(m, l):
    for t in range(2, m // l + 1):
        assert ratio_below_reciprocal(m, l, t)


def test_induced_edges_examples():
    assert induced_edges(family_A(7, 3, 1)) == 0  # a star is intersecting
    assert induced_edges(Family.from_sets(4, 2, [[1, 2], [3, 4]])) == 1
    kp = kneser_params(9, 3)
    assert induced_edges(full_layer(9, 3)) * 2 == kp.D * kp.M


def test_induced_edges_against_enumeration(rng):
    for _ in range(40):
        f = random_family(rng, 8, 3)
        assert induced_edges(f) == brute_edges(as_sets(f))


def test_alon_chung_extremes():
    for g in (full_layer(8, 2), Family(8, 2, ())):
        rep = check_alon_chung(g)
        assert rep.deviation == 0 and rep.bound == 0 and rep.holds and rep.joint_holds


def test_alon_chung_intersecting_family():
    g = family_A(9, 3, 1)
    rep = check_alon_chung(g)
    assert rep.edges == 0 and rep.joint_probability == 0
    kp = kneser_params(9, 3)
    alpha = Fraction(len(g), binom(9, 3))
    assert rep.joint_deviation == alpha ** 2 <= Fraction(kp.lam) * alpha * (1 - alpha) / kp.D


@pytest.mark.parametrize("m,l", [(9, 3), (10, 2), (8, 2)])
def test_alon_chung_random_subfamilies(m, l):
    rng = np.random.default_rng(m * 10 + l)
    for _ in range(300):
        g = random_family(rng, m, l)
        rep = check_alon_chung(g)
        assert rep.holds and rep.joint_holds
        assert rep.edges == brute_edges(as_sets(g))


def test_alon_chung_rejects_outside_ground_set():
    with pytest.raises(PreconditionError):
        check_alon_chung(Family.from_sets(9, 2, [[1, 9]]), m=8)
