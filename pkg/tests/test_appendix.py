from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest
from flint import arb
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_family
from emclab.certify.appendix import (
    C_DEFAULT, RhoProfile, bridge_gap, check_consistency, check_robustness, cond1_limit,
    cond1_max_ratio, cond1_monotone_in_k, envelope, envelope_tight, exchange_increases_ratio, item_A,
    item_B, item_C, phi, phi_exact, phi_monotone_in_c, phi_sums, profile_search,
    ratio_bound, robustness_rhs, size_chain, _item_B_point,
)
from emclab.certify.balls import as_float, certainly_le, precision, to_arb
from emclab.combinatorics import tail_decompose
from emclab.errors import PreconditionError, ScaleLimitError
from emclab.family import Family, family_A
from oracles import mp_cond1, mp_phi, mp_sums

C = C_DEFAULT

# 50-digit mpmath reference values
PHI_50_5 = "0.029171599693680325619797961666313006247552006139346"
COND1_5 = "0.83737773559503482554631746185472203415756473426321"
COND1_LIMIT = "0.88575689439487806513858627914232494152507671164272"
ITEM_A_K4 = ("0.0649037837630020979812", "0.0865383783506694639750")
ITEM_A_RATIO = {4: "0.75", 7: "0.808175372436119140640", 10: "0.826167343640304894626"}
ITEM_B_K100 = ("0.224492850308215367855", "0.256537073087737023597", "0.875089310118688523446")


@pytest.fixture(autouse=True)
def high_precision():
    # 200 bits covers the 50-digit references; the certificates set their own precision
    with precision(200):
        yield


def encloses(ball: arb, decimal: str, slack: float = 1e-18) -> bool:
    ref = arb(decimal)
    return as_float(abs(ball.mid() - ref).upper()) <= as_float(ball.rad()) + slack


# ── single terms ────────────────────────────────────────────────────────────

@given(st.integers(2, 200), st.data())
def test_log_space_matches_exact(k, data):
    hi = min(k - 1, int(C * (k - 1)) - 2)
    if hi < 1:
        return
    i = data.draw(st.integers(1, hi))
    exact = phi_exact(k, i, C)
    ball = phi(k, i, C)
    assert ball.contains(arb(exact.numerator) / exact.denominator)
    assert as_float(ball.rad()) <= 1e-30 + 1e-25 * as_float(ball)


def test_phi_50_5_against_mpmath():
    ball = phi(50, 5, C)
    assert encloses(ball, PHI_50_5)
    with mpmath.workdps(50):
        assert abs(mp_phi(50, 5, C) - mpmath.mpf(PHI_50_5)) < mpmath.mpf(10) ** -45


def test_phi_last_index_is_closed_form():
    # i = k-1: φ = (k-1)^k / (c(k-1))^k = c^{-k}
    for k in (3, 7, 30):
        assert phi_exact(k, k - 1, C) == C ** -k


def test_phi_at_2e4_100():
    v = phi(20000, 100, C)
    assert certainly_le(v, arb("3e-5"))
    assert encloses(v, "1.9585579413286738672e-7", slack=1e-25)


def test_phi_preconditions():
    with pytest.raises(PreconditionError):
        phi(5, 0, C)
    with pytest.raises(PreconditionError):
        phi(3, 2, Fraction(1))
    with pytest.raises(ScaleLimitError):
        phi_exact(201, 3, C)


def test_phi_monotone_in_c():
    cs = [Fraction(13, 10), Fraction(3, 2), C, 2, 3]
    for k, i in ((10, 3), (50, 5), (200, 40)):
        assert phi_monotone_in_c(k, i, cs)


@pytest.mark.parametrize("k,I", [(20, 2), (200, 5), (20000, 100)])
def test_ratio_bound_dominates_consecutive_ratios(k, I):
    R = ratio_bound(k, I, C)
    for i in range(I, min(k - 2, I + 40)):
        assert certainly_le(phi(k, i + 1, C) / phi(k, i, C), R)


def test_ratio_bound_needs_large_I():
    with pytest.raises(PreconditionError):
        ratio_bound(100, 1, C)


def test_envelope_chain():
    for k in (1000, 20000):
        for i in (2, 5, 50, 200):
            assert certainly_le(phi(k, i, C), envelope_tight(k, i, C))
            assert certainly_le(envelope_tight(k, i, C), envelope(k, i, C))


# ── sums and the two conditions ─────────────────────────────────────────────

def test_cond1_against_mpmath():
    assert encloses(cond1_max_ratio(C, 5), COND1_5)
    assert encloses(cond1_limit(C), COND1_LIMIT)
    with mpmath.workdps(50):
        assert abs(mp_cond1(5, C) - mpmath.mpf(COND1_5)) < mpmath.mpf(10) ** -45


def test_cond1_increases_with_k():
    assert cond1_monotone_in_k(C, [3, 4, 10, 100, 20000, 100000])
    assert certainly_le(cond1_max_ratio(C, 100000), cond1_limit(C))


def test_single_nonzero_rho_gives_i_over_i_plus_1():
    for i in (1, 3, 6):
        rho = RhoProfile(tuple(1 if j == i else 0 for j in range(1, 9)))
        r = phi_sums(9, C, rho).ratio
        assert r.contains(arb(i) / (i + 1)) and as_float(r.rad()) < 1e-30


def test_all_zero_rho_rejected():
    with pytest.raises(PreconditionError):
        phi_sums(8, C, RhoProfile((0,) * 7))
    with pytest.raises(PreconditionError):
        RhoProfile((Fraction(3, 2),))


@pytest.mark.parametrize("k", [4, 7, 10])
def test_item_A_sums_against_mpmath(k):
    s = phi_sums(k, C, RhoProfile.item(k, Fraction(1, 2)))
    assert encloses(s.ratio, ITEM_A_RATIO[k], slack=1e-20)
    assert s.truncated_at is None
    with mpmath.workdps(50):
        rho = lambda i: 0 if i < 3 else (mpmath.mpf(1) / 2 if i == 3 else 1)
        N, D, r = mp_sums(k, C, rho)
        assert abs(r - mpmath.mpf(ITEM_A_RATIO[k])) < mpmath.mpf(10) ** -20
    if k == 4:
        assert encloses(s.N, ITEM_A_K4[0], slack=1e-20)
        assert encloses(s.D, ITEM_A_K4[1], slack=1e-20)


def test_truncated_sum_encloses_full_sum():
    k = 100
    s = phi_sums(k, C, RhoProfile.item(k, Fraction(1, 10)))
    assert s.truncated_at is not None
    for got, ref in zip((s.N, s.D, s.ratio), ITEM_B_K100):
        assert encloses(got, ref, slack=1e-20)
    with mpmath.workdps(50):
        rho = lambda i: 0 if i < 3 else (mpmath.mpf(1) / 10 if i == 3 else 1)
        N, D, r = mp_sums(k, C, rho)
        assert abs(r - mpmath.mpf(ITEM_B_K100[2])) < mpmath.mpf(10) ** -20


def test_exchange_to_larger_index_raises_ratio():
    k = 30
    rho = RhoProfile.item(k, Fraction(1, 10))
    for i, j in ((3, 4), (3, 10), (5, 20)):
        amount = phi(k, i, C) * to_arb(rho[i]) / 2
        assert exchange_increases_ratio(k, C, rho, i, j, amount)
    with pytest.raises(PreconditionError):
        exchange_increases_ratio(k, C, rho, 4, 4, 0)


def test_consistency_fails_exactly_at_the_gap():
    # margin is a - b - σ; a σ equal to the gap cannot be certified >= 0 with non-zero radius
    k = 6
    rho = RhoProfile.item(k, Fraction(1, 2))
    base = check_consistency(C, k, rho, 0)
    assert base.passed
    gap = base.values["gap"]
    above = Fraction(as_float(gap.upper())) + Fraction(1, 10**9)
    assert not check_consistency(C, k, rho, above).passed
    below = Fraction(as_float(gap.lower())) - Fraction(1, 10**9)
    assert check_consistency(C, k, rho, below).passed


def test_robustness_rhs_forms():
    plain = robustness_rhs(C, 10)
    strong = robustness_rhs(C, 10, strengthened=True)
    assert certainly_le(strong, plain)
    r = check_robustness(C, 10, RhoProfile.item(10, Fraction(1, 2)), Fraction(8, 100))
    assert r.passed and r.name == "robustness"


# ── the three items ─────────────────────────────────────────────────────────

def test_item_A():
    res = item_A()
    assert res.passed and res.max_radius < 1e-9 and res.seconds < 1
    assert [r["k"] for r in res.rows] == list(range(4, 11))
    assert as_float(res.values["min_consistency_gap"].lower()) >= 0.03
    assert as_float(res.values["min_robustness_gap"].lower()) >= 0.08


def test_item_B_small_grid_with_bridging():
    res = item_B(grid=[11, 12, 20, 40, 80, 200], bridge=True)
    assert res.passed, res.notes
    assert "0 integers left uncovered" in res.notes[-1]


def test_item_B_bridge_covers_a_gap():
    for a, b in ((600, 612), (5000, 5100)):
        br = bridge_gap(_item_B_point(a, C), b, C, Fraction(5, 1000))
        assert br.ok
        # the bridged gaps are lower bounds for the directly computed ones at the far end
        q = _item_B_point(b, C)
        assert certainly_le(br.consistency_gap, q.cons_gap)
        assert certainly_le(br.robustness_gap_plain, q.rob_gap_plain)


def test_bridge_fails_closed_on_wide_gap():
    # per-step bounds compound over 60 steps at k=200; the bridge must refuse, not pass
    assert not bridge_gap(_item_B_point(200, C), 260, C, Fraction(5, 1000)).ok


def test_item_B_grid_range_checked():
    with pytest.raises(PreconditionError):
        item_B(grid=[10, 20])


def test_item_C():
    res = item_C()
    assert res.passed
    assert certainly_le(abs(res.values["sum"] - arb("0.234")), arb("0.002"))
    assert certainly_le(abs(res.values["ratio"] - arb("0.88")), arb("0.005"))
    assert res.values["ratio_above_4/5"] and res.values["denominator_above_1/5"]


def test_certificate_as_dict_is_plain():
    d = item_A().as_dict()
    assert d["passed"] and d["inputs"]["c"] == "833/500"
    assert set(d["margin"]) >= {"mid", "rad"}
    assert len(d["rows"]) == 7


def test_profile_search_reports_best_step():
    best = profile_search(C, 6)
    assert best["k"] == 6 and 1 <= best["step"] <= 5


# ── finite-size chain ───────────────────────────────────────────────────────

def test_size_chain_on_decomposed_families(rng):
    seen = 0
    for _ in range(80):
        m, k, s = int(rng.integers(9, 15)), int(rng.integers(2, 5)), int(rng.integers(1, 3))
        if m <= k * (s + 1):
            continue
        # keep the sets that have a tail index
        dec = tail_decompose(random_family(rng, m, k, 0.5), s, strict=False)
        g = Family(m, k, tuple(sorted(dec.tails)))
        rep = size_chain(g, s)
        assert rep.parts_ok and rep.chain_ok and rep.total_ok
        assert rep.c_prime == Fraction(g.n, (g.k - 1) * (s + 1))
        seen += 1
    assert seen >= 10


def test_size_chain_precondition():
    with pytest.raises(PreconditionError):
        size_chain(family_A(6, 2, 2), 2)
    with pytest.raises(PreconditionError):
        size_chain(Family(9, 1, ()), 1)
