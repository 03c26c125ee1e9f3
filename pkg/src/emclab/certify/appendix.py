"""Rigorous evaluation of the φ-sums behind the large-k size estimates.

φ(k, i, c) = C(k, i+1) i^{i+1} (c(k-1) - i - 1)^{k-i-1} / (c(k-1))^k

is evaluated in log space with arb balls. Sums over i are truncated once a
certified geometric tail drops below a tolerance; the tail is carried as a
one-sided ball, so every reported quantity is an enclosure.

Ratio lemma used for the tails (c > 1, i >= 1/(c-1)):
    φ(k,i+1)/φ(k,i) <= y e^{1-y} e^{1/i + 1/A},  y = (k-i-1)/A <= 1/c,
    A = c(k-1) - i - 1 >= (c-1)(k-1),
so for all i >= I the ratio is at most R(I) = e^{1-1/c} e^{1/I + 1/((c-1)(k-1))} / c.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from flint import arb, ctx

from ..combinatorics import binom, tail_decompose
from ..errors import PreconditionError, ScaleLimitError
from ..family import Family
from .balls import (as_float, ball_json, certainly_ge, certainly_le, certainly_lt,
                    from_bounds, nonneg_upto, precision, radius, to_arb)

C_DEFAULT = Fraction(1666, 1000)
DELTA_DEFAULT = Fraction(1, 10**6)
EXACT_MAX_K = 200
TAIL_TOL = Fraction(1, 10**12)

ITEM_A = dict(k_range=(4, 10), rho3=Fraction(1, 2), sigma_consistency=Fraction(3, 100),
              sigma_robustness=Fraction(8, 100))
ITEM_B = dict(k_range=(11, 20000), rho3=Fraction(1, 10), sigma=Fraction(5, 1000))
ITEM_C = dict(k=20000, rho3=Fraction(1, 10))


# -- profiles ---------------------------------------------------------------

@dataclass(frozen=True)
class RhoProfile:
    """ρ_1..ρ_{k-1}; ``rho[i-1]`` is ρ_i."""
    rho: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.rho)
        if any(not (0 <= v <= 1) for v in vals):
            raise PreconditionError("each ρ_i must lie in [0, 1]")
        object.__setattr__(self, "rho", vals)

    @classmethod
    def step(cls, k: int, leading: Sequence = (), rest=1) -> "RhoProfile":
        """Given leading values ρ_1, ρ_2, ..., then ``rest`` for every later i."""
        lead = [Fraction(v) for v in leading][: k - 1]
        return cls(tuple(lead + [Fraction(rest)] * (k - 1 - len(lead))))

    @classmethod
    def item(cls, k: int, rho3) -> "RhoProfile":
        return cls.step(k, (0, 0, rho3))

    @property
    def k(self) -> int:
        return len(self.rho) + 1

    def __getitem__(self, i: int) -> Fraction:
        return self.rho[i - 1]

    def is_zero(self) -> bool:
        return not any(self.rho)

    def first_nonzero(self) -> int:
        return next(i for i, v in enumerate(self.rho, 1) if v)


def _as_c(c) -> Fraction:
    c = Fraction(c) if not isinstance(c, Fraction) else c
    if c <= 1:
        raise PreconditionError(f"need c > 1, got {c}")
    return c


# -- single terms ------------------------------------------------------------

def phi_exact(k: int, i: int, c) -> Fraction:
    c = Fraction(c)
    if k > EXACT_MAX_K:
        raise ScaleLimitError(f"exact φ limited to k <= {EXACT_MAX_K}")
    _check_term(k, i, c)
    B = c * (k - 1)
    return binom(k, i + 1) * Fraction(i) ** (i + 1) * (B - i - 1) ** (k - i - 1) / B ** k


def _check_term(k: int, i: int, c: Fraction) -> None:
    if k < 2 or not (1 <= i <= k - 1):
        raise PreconditionError(f"need k >= 2 and 1 <= i <= k-1, got k={k}, i={i}")
    if c * (k - 1) <= i + 1:
        raise PreconditionError(f"need c(k-1) > i+1, got c={c}, k={k}, i={i}")


def log_phi(k: int, i: int, c) -> arb:
    c = Fraction(c)
    _check_term(k, i, c)
    p, q = c.numerator, c.denominator
    lbin = arb(k + 1).lgamma() - arb(i + 2).lgamma() - arb(k - i).lgamma()
    lq = arb(q).log()
    lB = arb(p * (k - 1)).log() - lq
    la = arb(p * (k - 1) - q * (i + 1)).log() - lq
    return lbin + (i + 1) * arb(i).log() + (k - i - 1) * la - k * lB


def phi(k: int, i: int, c=C_DEFAULT) -> arb:
    return log_phi(k, i, c).exp()


def ratio_bound(k: int, I: int, c) -> arb:
    """R(I): bounds φ(k,i+1)/φ(k,i) for every i >= I (see module docstring)."""
    c = _as_c(c)
    if I * (c - 1) < 1 or k < 3:
        raise PreconditionError(f"ratio bound needs I >= 1/(c-1), got I={I}")
    ca = to_arb(c)
    return (1 - 1 / ca + arb(1) / I + 1 / ((ca - 1) * (k - 1))).exp() / ca


# -- sums --------------------------------------------------------------------

_LOG_CACHE: dict[int, list] = {}


def _logs(n: int) -> list:
    """log 0..n as balls at the current precision (index 0 unused)."""
    tab = _LOG_CACHE.setdefault(ctx.prec, [arb(0)])
    while len(tab) <= n:
        tab.append(arb(len(tab)).log())
    return tab


@dataclass
class PhiSums:
    """N = Σ ρ_i φ_i and D = Σ (i+1)/i ρ_i φ_i with enclosures."""
    k: int
    c: Fraction
    N: arb
    D: arb
    ratio: arb
    truncated_at: int | None  # last explicit index, None when the full sum was taken
    tail: arb | None  # bound on Σ_{i > truncated_at} φ_i
    terms: list = field(default_factory=list, repr=False)  # (i, ρ_i, φ_i) when kept

    @property
    def E(self) -> arb:
        return self.D - self.N


def iter_phi(k: int, c, stop: int | None = None):
    """Yield (i, φ(k,i,c)) for i = 1..min(k-1, stop) using running log-binomials."""
    c = _as_c(c)
    if c * (k - 1) <= k:
        raise PreconditionError(f"need c(k-1) > k, got c={c}, k={k}")
    last = k - 1 if stop is None else min(k - 1, stop)
    p, q = c.numerator, c.denominator
    logs = _logs(k + 1)
    lq = arb(q).log()
    lB = arb(p * (k - 1)).log() - lq
    klB = k * lB
    lbin = logs[k] + logs[k - 1] - logs[2]  # log C(k, 2)
    for i in range(1, last + 1):
        if i > 1:
            lbin += logs[k - i] - logs[i + 1]  # C(k, i+1) from C(k, i)
        la = arb(p * (k - 1) - q * (i + 1)).log() - lq
        lp = lbin + (i + 1) * logs[i] + (k - i - 1) * la - klB
        yield i, lp.exp()


def phi_sums(k: int, c=C_DEFAULT, rho: RhoProfile | None = None, tail_tol=TAIL_TOL,
             keep_terms: bool = False, i_min: int = 1) -> PhiSums:
    """Certified N, D and N/D for a profile (ρ ≡ 1 when omitted).

    Terms below ``i_min`` are skipped (they must have ρ_i = 0 to be meaningful).
    """
    c = _as_c(c)
    if rho is not None and rho.k != k:
        raise PreconditionError(f"profile has k={rho.k}, expected {k}")
    if rho is not None and rho.is_zero():
        raise PreconditionError("all-zero ρ profile")
    tol = to_arb(tail_tol)
    tol_f = float(tail_tol) / 16
    i_ratio = max(2, math.ceil(1 / (c - 1)))
    weights: dict[Fraction, arb] = {}
    N = arb(0)
    D = arb(0)
    kept = []
    truncated, tail = None, None
    for i, v in iter_phi(k, c):
        w = Fraction(1) if rho is None else rho[i]
        if i >= i_min and w:
            wa = weights.get(w)
            if wa is None:
                wa = weights[w] = to_arb(w)
            term = wa * v
            N += term
            D += term * (i + 1) / i
            if keep_terms:
                kept.append((i, w, v))
        if i >= i_ratio and i < k - 1 and as_float(v) < tol_f:
            R = ratio_bound(k, i, c)
            if certainly_lt(R, 1):
                T = v * R / (1 - R)
                if certainly_lt(T, tol):
                    truncated, tail = i, T
                    break
    if truncated is None:
        ratio = N / D
    else:
        I = truncated
        ratio = from_bounds(N / (D + tail * (I + 2) / (I + 1)), (N + tail) / (D + tail))
        N = N + nonneg_upto(tail)
        D = D + nonneg_upto(tail * (I + 2) / (I + 1))
    return PhiSums(k, c, N, D, ratio, truncated, tail, kept)


# -- the two conditions ------------------------------------------------------

def cond1_max_ratio(c, k: int) -> arb:
    """Largest admissible q'/s in the shadow-count condition."""
    c = _as_c(c)
    if k < 3:
        raise PreconditionError("need k >= 3")
    ca = to_arb(c)
    x = arb(k - 1) / (ca * (k - 1) - arb(1) / 2)
    return (ca - 1) / (ca * (1 - (-x).exp()))


def cond1_limit(c) -> arb:
    ca = to_arb(_as_c(c))
    return (ca - 1) / (ca * (1 - (-1 / ca).exp()))


def cond2_max_ratio(c, k: int, rho: RhoProfile, sums: PhiSums | None = None) -> arb:
    if rho.is_zero():
        raise PreconditionError("all-zero ρ profile")
    return (sums or phi_sums(k, c, rho)).ratio


def robustness_rhs(c, k: int, delta=DELTA_DEFAULT, strengthened: bool = False) -> arb:
    ca, d = to_arb(_as_c(c)), to_arb(delta)
    if strengthened:
        return (ca - 1) / (ca * ca) - d
    return (ca - 1) * k / (ca * ca * (k - 1)) - d


@dataclass
class CertificateResult:
    name: str
    inputs: dict
    values: dict  # name -> arb (or plain number)
    margin: arb  # quantity that must be certified >= 0
    passed: bool
    notes: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def max_radius(self) -> float:
        rs = [radius(v) for v in self.values.values() if isinstance(v, arb)]
        return max(rs + [radius(self.margin)])

    def as_dict(self) -> dict:
        def enc(v):
            if isinstance(v, arb):
                return ball_json(v)
            if isinstance(v, Fraction):
                return str(v)
            return v
        return {
            "name": self.name,
            "inputs": {k: enc(v) for k, v in self.inputs.items()},
            "values": {k: enc(v) for k, v in self.values.items()},
            "margin": ball_json(self.margin),
            "max_radius": self.max_radius,
            "passed": self.passed,
            "notes": list(self.notes),
            "rows": [{k: enc(v) for k, v in r.items()} for r in self.rows],
            "seconds": round(self.seconds, 4),
        }


def _rho_desc(rho: RhoProfile) -> str:
    head = ",".join(str(v) for v in rho.rho[:4])
    return f"({head}{',...' if rho.k > 5 else ''})"


def check_consistency(c, k: int, rho: RhoProfile, sigma, sums: PhiSums | None = None) -> CertificateResult:
    t0 = time.perf_counter()
    c = _as_c(c)
    sums = sums or phi_sums(k, c, rho)
    a = cond1_max_ratio(c, k)
    b = sums.ratio
    margin = a - b - to_arb(sigma)
    return CertificateResult(
        "consistency", {"c": c, "k": k, "rho": _rho_desc(rho), "sigma": Fraction(sigma)},
        {"cond1_max_ratio": a, "cond2_ratio": b, "gap": a - b}, margin,
        certainly_ge(margin, 0), seconds=time.perf_counter() - t0)


def check_robustness(c, k: int, rho: RhoProfile, sigma, delta=DELTA_DEFAULT,
                     strengthened: bool = False, sums: PhiSums | None = None) -> CertificateResult:
    t0 = time.perf_counter()
    c = _as_c(c)
    sums = sums or phi_sums(k, c, rho)
    rhs = robustness_rhs(c, k, delta, strengthened)
    margin = rhs - sums.N - to_arb(sigma)
    return CertificateResult(
        "robustness" + ("-strengthened" if strengthened else ""),
        {"c": c, "k": k, "rho": _rho_desc(rho), "sigma": Fraction(sigma), "delta": Fraction(delta)},
        {"lhs": sums.N, "rhs": rhs, "gap": rhs - sums.N}, margin,
        certainly_ge(margin, 0), seconds=time.perf_counter() - t0)


# -- the three items ---------------------------------------------------------

def _min_ball(balls: Iterable[arb]) -> arb:
    best = None
    for b in balls:
        if best is None or as_float(b.lower()) < as_float(best.lower()):
            best = b
    return best


def item_A(c=C_DEFAULT, prec: int | None = None) -> CertificateResult:
    t0 = time.perf_counter()
    lo, hi = ITEM_A["k_range"]
    with precision(prec):
        rows, ok = [], True
        cons_m, rob_m = [], []
        for k in range(lo, hi + 1):
            rho = RhoProfile.item(k, ITEM_A["rho3"])
            sums = phi_sums(k, c, rho)
            cr = check_consistency(c, k, rho, ITEM_A["sigma_consistency"], sums)
            rr = check_robustness(c, k, rho, ITEM_A["sigma_robustness"], sums=sums)
            ok &= cr.passed and rr.passed
            cons_m.append(cr.values["gap"])
            rob_m.append(rr.values["gap"])
            rows.append({"k": k, "sum": sums.N, "ratio": sums.ratio,
                         "cond1": cr.values["cond1_max_ratio"],
                         "consistency_gap": cr.values["gap"], "robustness_gap": rr.values["gap"],
                         "consistency_ok": cr.passed, "robustness_ok": rr.passed,
                         "radius": max(cr.max_radius, rr.max_radius)})
        cmin, rmin = _min_ball(cons_m), _min_ball(rob_m)
        margin = arb(min(as_float((cmin - to_arb(ITEM_A["sigma_consistency"])).lower()),
                         as_float((rmin - to_arb(ITEM_A["sigma_robustness"])).lower())))
        res = CertificateResult(
            "item-A", {"c": Fraction(c), "k_range": f"{lo}..{hi}", "rho": "(0,0,1/2,1,...)",
                       "sigma_consistency": ITEM_A["sigma_consistency"],
                       "sigma_robustness": ITEM_A["sigma_robustness"], "delta": DELTA_DEFAULT},
            {"min_consistency_gap": cmin, "min_robustness_gap": rmin}, margin, ok, rows=rows)
        res.notes.append("full sums over i (no truncation) for every k")
    res.seconds = time.perf_counter() - t0
    return res


def default_item_B_grid(dense_to: int = 512, k_max: int = 20000, step: float = 1.02) -> list[int]:
    ks = list(range(ITEM_B["k_range"][0], dense_to + 1))
    x = float(dense_to)
    while True:
        x *= step
        k = int(round(x))
        if k >= k_max:
            break
        if k > ks[-1]:
            ks.append(k)
    ks.append(k_max)
    return ks


@dataclass
class _GridPoint:
    k: int
    sums: PhiSums
    cond1: arb
    cons_gap: arb
    rob_gap: arb  # strengthened right-hand side
    rob_gap_plain: arb


def _item_B_point(k: int, c: Fraction) -> _GridPoint:
    rho = RhoProfile.item(k, ITEM_B["rho3"])
    sums = phi_sums(k, c, rho, keep_terms=True, i_min=3)
    a = cond1_max_ratio(c, k)
    return _GridPoint(k, sums, a, a - sums.ratio,
                      robustness_rhs(c, k, strengthened=True) - sums.N,
                      robustness_rhs(c, k) - sums.N)


def step_log_upper(j: int, i: int, c: Fraction) -> arb:
    """Upper bound on log φ(j'+1,i)/φ(j',i) valid for every j' >= j."""
    ca = to_arb(c)
    out = arb(i * (i + 1)) / (j * (j - i))
    extra = (i + 1) * (1 + i - c * i)
    if extra > 0:
        out += to_arb(extra) / (ca * j * (ca * (j - 1) - i - 1))
    return out


def step_log_lower(j: int, i: int, c: Fraction) -> arb:
    """ℓ with log φ(j'+1,i)/φ(j',i) >= -ℓ for every j' >= j."""
    ca = to_arb(c)
    return arb(2 * (i + 1)) / (j * j - 1) + arb(i * (i + 1)) / (j * (ca * (j - 1) - i - 1) + i + 1)


@dataclass(frozen=True)
class BridgeResult:
    k1: int
    k2: int
    consistency_gap: arb
    robustness_gap: arb  # strengthened right-hand side
    robustness_gap_plain: arb
    ok: bool


def bridge_gap(p: _GridPoint, k2: int, c: Fraction, sigma) -> BridgeResult:
    """Enclose the margins for every k in (p.k, k2] from the terms at p.k."""
    k1, s = p.k, p.sums
    w = k2 - k1
    if s.truncated_at is None or not s.terms:
        bad = arb(-1)
        return BridgeResult(k1, k2, bad, bad, bad, False)
    I = s.truncated_at
    N_hi = arb(0)
    E_lo = arb(0)
    phiI = None
    for i, rho_i, v in s.terms:
        if i == I:
            phiI = v
        up = (w * step_log_upper(k1, i, c)).exp()
        dn = (-w * step_log_lower(k1, i, c)).exp()
        r = to_arb(rho_i) * v
        N_hi += r * up
        E_lo += r * dn / i
    if phiI is None:  # ρ_I = 0 cannot happen for these profiles, but recompute to be safe
        phiI = phi(k1, I, c)
    R = ratio_bound(k1, I, c)
    if not certainly_lt(R, 1):
        bad = arb(-1)
        return BridgeResult(k1, k2, bad, bad, bad, False)
    tail = phiI * (w * step_log_upper(k1, I, c)).exp() * R / (1 - R)
    N_hi += tail
    r_hi = N_hi / (N_hi + E_lo)
    cons = p.cond1 - r_hi  # cond1 increases with k
    rob = robustness_rhs(c, k2, strengthened=True) - N_hi
    rob_plain = robustness_rhs(c, k2) - N_hi  # plain right-hand side decreases with k
    sg = to_arb(sigma)
    ok = certainly_ge(cons - sg, 0) and certainly_ge(rob - sg, 0) and certainly_ge(rob_plain - sg, 0)
    return BridgeResult(k1, k2, cons, rob, rob_plain, ok)


def item_B(c=C_DEFAULT, grid: Sequence[int] | None = None, bridge: bool = False,
           prec: int | None = None, max_refine: int = 20000) -> CertificateResult:
    """Consistency and (plain and strengthened) robustness on a k-grid.

    With ``bridge=True`` the gaps between grid points are covered by
    certified per-step ratio bounds; a gap that cannot be closed is split
    by computing its midpoint directly.
    """
    t0 = time.perf_counter()
    c = _as_c(c)
    sigma = ITEM_B["sigma"]
    sg = to_arb(sigma)
    ks = sorted(set(grid if grid is not None else default_item_B_grid()))
    if ks[0] <= 10 or ks[-1] > ITEM_B["k_range"][1]:
        raise PreconditionError("item B grid must lie in (10, 20000]")
    with precision(prec):
        points = {}
        rows, ok = [], True
        for k in ks:
            pt = points[k] = _item_B_point(k, c)
            good = (certainly_ge(pt.cons_gap - sg, 0) and certainly_ge(pt.rob_gap - sg, 0)
                    and certainly_ge(pt.rob_gap_plain - sg, 0))
            ok &= good
            rows.append({"k": k, "sum": pt.sums.N, "ratio": pt.sums.ratio, "cond1": pt.cond1,
                         "consistency_gap": pt.cons_gap, "robustness_gap_strengthened": pt.rob_gap,
                         "robustness_gap": pt.rob_gap_plain, "ok": good,
                         "truncated_at": pt.sums.truncated_at})
        cmin = _min_ball(p.cons_gap for p in points.values())
        rmin = _min_ball(p.rob_gap for p in points.values())
        pmin = _min_ball(p.rob_gap_plain for p in points.values())
        values = {"min_consistency_gap": cmin, "min_robustness_gap_strengthened": rmin,
                  "min_robustness_gap": pmin}
        notes = [f"{len(ks)} grid points, k from {ks[0]} to {ks[-1]}"]
        if bridge:
            stats = _bridge_all(points, ks, c, sigma, max_refine)
            ok &= stats["uncovered"] == 0
            values.update({"bridge_min_consistency_gap": stats["cons"],
                           "bridge_min_robustness_gap_strengthened": stats["rob"]})
            notes.append(f"bridging: {stats['gaps']} gaps closed, {stats['refined']} extra points "
                         f"computed, {stats['uncovered']} integers left uncovered")
            if stats["failed_at"]:
                notes.append("bridging failed next to k = " + ",".join(map(str, stats["failed_at"][:20])))
        margin = arb(min(as_float((v - sg).lower()) for v in values.values()))
    res = CertificateResult(
        "item-B", {"c": c, "k_range": f"{ks[0]}..{ks[-1]}", "rho": "(0,0,1/10,1,...)",
                   "sigma": sigma, "delta": DELTA_DEFAULT, "bridged": bridge},
        values, margin, ok, notes=notes, rows=rows)
    res.seconds = time.perf_counter() - t0
    return res


def _bridge_all(points: dict, ks: list[int], c: Fraction, sigma, max_refine: int) -> dict:
    stack = [(a, b) for a, b in zip(ks, ks[1:]) if b - a > 1]
    gaps = refined = 0
    cons = rob = None
    failed = []
    uncovered = 0
    sg = to_arb(sigma)
    while stack:
        a, b = stack.pop()
        br = bridge_gap(points[a], b - 1, c, sigma)
        if br.ok:
            gaps += 1
            cons = br.consistency_gap if cons is None else _min_ball([cons, br.consistency_gap])
            rob = br.robustness_gap if rob is None else _min_ball([rob, br.robustness_gap])
            continue
        if refined >= max_refine:
            failed.append(a)
            uncovered += b - a - 1
            continue
        mid = (a + b) // 2
        pt = points[mid] = _item_B_point(mid, c)
        refined += 1
        if not (certainly_ge(pt.cons_gap - sg, 0) and certainly_ge(pt.rob_gap - sg, 0)
                and certainly_ge(pt.rob_gap_plain - sg, 0)):
            failed.append(mid)
            uncovered += 1
        for lo, hi in ((a, mid), (mid, b)):
            if hi - lo > 1:
                stack.append((lo, hi))
    return {"gaps": gaps, "refined": refined, "uncovered": uncovered, "failed_at": sorted(failed),
            "cons": cons if cons is not None else arb(0), "rob": rob if rob is not None else arb(0)}


def item_C(c=C_DEFAULT, prec: int | None = None) -> CertificateResult:
    t0 = time.perf_counter()
    k = ITEM_C["k"]
    with precision(prec):
        rho = RhoProfile.item(k, ITEM_C["rho3"])
        sums = phi_sums(k, c, rho)
        sum_ok = certainly_le(abs(sums.N - to_arb("0.234")), to_arb("0.002"))
        ratio_ok = certainly_le(abs(sums.ratio - to_arb("0.88")), to_arb("0.005"))
        # the slack facts used when propagating consistency past this k
        ratio_big = certainly_ge(sums.ratio, to_arb(Fraction(4, 5)))
        denom_big = certainly_ge(sums.D, to_arb(Fraction(1, 5)))
        margin = arb(min(as_float(to_arb("0.002") - abs(sums.N - to_arb("0.234"))),
                         as_float(to_arb("0.005") - abs(sums.ratio - to_arb("0.88")))))
        res = CertificateResult(
            "item-C", {"c": Fraction(c), "k": k, "rho": "(0,0,1/10,1,...)"},
            {"sum": sums.N, "ratio": sums.ratio, "denominator": sums.D,
             "ratio_above_4/5": ratio_big, "denominator_above_1/5": denom_big},
            margin, sum_ok and ratio_ok and ratio_big and denom_big)
        res.notes.append(f"sum truncated after i={sums.truncated_at} with certified tail")
    res.seconds = time.perf_counter() - t0
    return res


# -- large-k tail and stability ----------------------------------------------

def envelope(k: int, i: int, c) -> arb:
    """(e^{1-(k-i)/(kc)}/c)^{i+1}, an upper bound for φ(k,i,c) when i >= 2."""
    ca = to_arb(_as_c(c))
    return ((1 - arb(k - i) / (k * ca)) * (i + 1) - (i + 1) * ca.log()).exp()


def envelope_tight(k: int, i: int, c) -> arb:
    """i^{i+1} e^{-(i+1)(k-i-1)/(c(k-1))} / ((i+1)! c^{i+1}), between φ and the envelope."""
    ca = to_arb(_as_c(c))
    lg = (i + 1) * arb(i).log() - arb(i + 2).lgamma() - (i + 1) * ca.log()
    return (lg - arb((i + 1) * (k - i - 1)) / (ca * (k - 1))).exp()


def tail_sum_certificate(k_min: int = 20000, c=C_DEFAULT, i_start: int = 100,
                         bound=Fraction(1, 2000), prec: int | None = None,
                         spot_checks: Sequence[int] = (50000, 100000, 1000000)) -> CertificateResult:
    """Σ_{i >= i_start} φ(k,i,c) <= bound for every k >= k_min, by two routes.

    Direct route: the certified truncated sum at k_min (and at spot-check k).
    Envelope route, uniform in k >= k_min:
      * φ <= envelope for i >= 2, and the envelope at fixed i decreases in k;
      * for i <= k/40 the envelope base is at most e^{1-39/(40c)}/c <= 0.91;
      * beyond k/40 the terms decrease in i (ratio lemma), so each is at most
        0.91^{k/40} <= e^{-k/500}, and there are fewer than k of them.
    """
    t0 = time.perf_counter()
    c = _as_c(c)
    notes = []
    with precision(prec):
        ca = to_arb(c)
        cut = k_min // 40
        # stated numeric facts
        phi100 = phi(k_min, i_start, c)
        phi100_ok = certainly_le(phi100, to_arb("3e-5"))
        base = (1 - arb(39) / (40 * ca)).exp() / ca
        base_ok = certainly_le(base, to_arb("0.91"))
        decay_ok = certainly_le(to_arb("0.91").log() / 40, arb(-1) / 500)
        tiny = k_min * (-arb(k_min) / 500).exp()
        tiny_ok = certainly_le(tiny, to_arb("1e-13"))
        # k e^{-k/500} decreases for k > 500
        mono_ok = k_min > 500
        R = ratio_bound(k_min, cut, c)
        ratio_ok = certainly_lt(R, 1)
        # envelope route
        env_sum = arb(0)
        for i in range(i_start, cut + 1):
            env_sum += envelope(k_min, i, c)
        geo = to_arb("0.91") ** (cut + 1) / (1 - to_arb("0.91"))
        env_total = env_sum + geo + tiny
        env_ok = certainly_le(env_total, to_arb(bound))
        # envelope dominates φ: spot-check the chain φ <= tight <= envelope
        chain_ok = True
        for i in (2, 3, 10, i_start, cut // 2, cut):
            f, t, e = phi(k_min, i, c), envelope_tight(k_min, i, c), envelope(k_min, i, c)
            chain_ok &= certainly_le(f, t) and certainly_le(t, e)
        # direct route
        direct = phi_sums(k_min, c, RhoProfile.step(k_min, [0] * (i_start - 1)), i_min=i_start)
        direct_ok = certainly_le(direct.N, to_arb(bound))
        rows = [{"k": k_min, "direct_sum": direct.N}]
        spot_ok = True
        for k in spot_checks:
            if k <= k_min:
                continue
            d = phi_sums(k, c, RhoProfile.step(k, [0] * (i_start - 1)), i_min=i_start)
            good = certainly_le(d.N, to_arb(bound))
            spot_ok &= good
            rows.append({"k": k, "direct_sum": d.N, "ok": good})
        checks = {"phi_at_100_le_3e-5": phi100_ok, "base_le_0.91": base_ok,
                  "0.91^(1/40)_le_e^(-1/500)": decay_ok, "k_e^(-k/500)_le_1e-13": tiny_ok,
                  "k_e^(-k/500)_decreasing": mono_ok, "terms_decrease_past_k/40": ratio_ok,
                  "phi_le_envelope": chain_ok, "envelope_route": env_ok, "direct_route": direct_ok,
                  "spot_checks": spot_ok}
        passed = all(checks.values())
        margin = to_arb(bound) - from_bounds(env_total, direct.N)
        res = CertificateResult(
            "tail-sum", {"k_min": k_min, "c": c, "i_start": i_start, "bound": Fraction(bound)},
            {"phi_k_100": phi100, "envelope_base": base, "envelope_sum": env_sum,
             "geometric_remainder": geo, "far_tail": tiny, "envelope_total": env_total,
             "direct_sum": direct.N, **checks}, margin, passed, rows=rows)
        notes.append("envelope summed term by term for i in [100, k/40]; a plain 0.91-geometric "
                     "series from i=100 is not used")
        res.notes = notes
    res.seconds = time.perf_counter() - t0
    return res


def growth(i: int, k: int) -> arb:
    """g = e^{1.01 (i+1)^2 / k}: bound on φ(k',i)/φ(k,i) for all k' > k."""
    return (arb(101 * (i + 1) ** 2) / (100 * k)).exp()


def stability_sweep(k_base: int = 20000, c=C_DEFAULT, i_range=(3, 99), limit=Fraction(3, 1000),
                    sigma_out=Fraction(15, 10000), tail: CertificateResult | None = None,
                    prec: int | None = None,
                    grid: Sequence[int] = (30000, 50000, 100000, 200000, 500000, 1000000)) -> CertificateResult:
    """Bound the change of the φ-sums for all k' > k_base and propagate the margins."""
    t0 = time.perf_counter()
    c = _as_c(c)
    lo, hi = i_range
    with precision(prec):
        ca = to_arb(c)
        # Σ_{j >= k} 1/j^2 <= 1/(k-1) <= 1.01/k
        tail_sq_ok = certainly_le(arb(1) / (k_base - 1), arb(101) / (100 * k_base))
        S1 = arb(0)
        S2 = arb(0)
        for i in range(lo, hi + 1):
            d = (growth(i, k_base) - 1) * envelope_tight(k_base, i, c)
            S1 += d
            S2 += d * (i + 1) / i
        s_ok = certainly_le(S1, to_arb(limit)) and certainly_le(S2, to_arb(limit))
        # per-step ratio chain: exact ratio <= e^{i(i+1)/(k(k-i))} <= e^{(i+1)^2/k^2}
        step_ok = lo * (c - 1) >= 1 and k_base >= hi * (hi + 1)
        step_rows = []
        for i, k in ((3, k_base), (10, k_base), (50, k_base), (99, k_base), (99, 2 * k_base)):
            exact = (log_phi(k + 1, i, c) - log_phi(k, i, c))
            mid = arb(i * (i + 1)) / (k * (k - i))
            top = arb((i + 1) ** 2) / (k * k)
            good = certainly_le(exact, mid) and certainly_le(mid, top)
            step_ok &= good
            step_rows.append({"i": i, "k": k, "log_ratio": exact, "bound": mid, "coarse_bound": top,
                              "ok": good})
        # base data at k_base (item B/C profile)
        rho = RhoProfile.item(k_base, ITEM_B["rho3"])
        base = phi_sums(k_base, c, rho, keep_terms=True, i_min=3)
        N_mid = arb(0)
        E_lo = arb(0)
        for i, w, v in base.terms:
            if lo <= i <= hi:
                r = to_arb(w) * v
                N_mid += r
                a_i = ca - arb(i + 1) / (k_base - 1)
                L = (2 * (i + 1) + arb(i * (i + 1)) / a_i) / (k_base - 1)
                E_lo += r * (-L).exp() / i
        tail = tail or tail_sum_certificate(k_base, c, hi + 1, prec=prec, spot_checks=())
        T = tail.values["envelope_total"]
        N_hi = N_mid + S1 + T
        rob = robustness_rhs(c, k_base, strengthened=True) - N_hi
        cond1 = cond1_max_ratio(c, k_base)
        r_hi = N_hi / (N_hi + E_lo)
        cons = cond1 - r_hi
        # increment route with the item C slack facts
        zeta = to_arb(Fraction(35, 10000))
        inc_ok = certainly_le(S1 + T, zeta)
        base_gap = cond1 - base.ratio
        zeta_gap = base_gap - zeta
        rigorous_inc = zeta * (1 - base.ratio) / base.D
        so = to_arb(sigma_out)
        prop_ok = certainly_ge(rob - so, 0) and certainly_ge(cons - so, 0) and certainly_ge(zeta_gap - so, 0)
        # direct cross-check on a grid of larger k
        rows = []
        grid_ok = True
        for k in grid:
            if k <= k_base:
                continue
            rk = RhoProfile.item(k, ITEM_B["rho3"])
            sk = phi_sums(k, c, rk, i_min=3)
            cg = cond1_max_ratio(c, k) - sk.ratio
            rg = robustness_rhs(c, k, strengthened=True) - sk.N
            good = certainly_ge(cg - so, 0) and certainly_ge(rg - so, 0)
            grid_ok &= good
            rows.append({"k": k, "consistency_gap": cg, "robustness_gap_strengthened": rg, "ok": good})
        checks = {"sum_1/j^2_le_1.01/k": tail_sq_ok, "sweep_sums_le_limit": s_ok,
                  "per_step_ratio_chain": step_ok, "increment_le_zeta": inc_ok,
                  "propagated_margins": prop_ok, "tail_certificate": tail.passed,
                  "grid_cross_check": grid_ok}
        margin = arb(min(as_float((rob - so).lower()), as_float((cons - so).lower()),
                         as_float((to_arb(limit) - S1).lower()), as_float((to_arb(limit) - S2).lower())))
        res = CertificateResult(
            "stability-sweep", {"k_base": k_base, "c": c, "i_range": f"{lo}..{hi}",
                                "limit": Fraction(limit), "sigma_out": Fraction(sigma_out)},
            {"sweep_sum": S1, "sweep_sum_weighted": S2, "tail_bound": T,
             "propagated_robustness_gap": rob, "propagated_consistency_gap": cons,
             "base_consistency_gap": base_gap, "zeta_route_gap": zeta_gap,
             "ratio_increase_bound": rigorous_inc, **checks},
            margin, all(checks.values()), rows=rows + step_rows)
        res.notes.append("consistency is propagated twice: via a ζ increment of the ratio and via "
                         "explicit upper/lower per-step bounds on numerator and denominator")
    res.seconds = time.perf_counter() - t0
    return res


# -- grid properties ---------------------------------------------------------

def phi_monotone_in_c(k: int, i: int, cs: Sequence) -> bool:
    """φ(k,i,·) strictly decreasing along an increasing list of c' > k/(k-1)."""
    vals = [phi(k, i, Fraction(cv)) for cv in sorted(Fraction(x) for x in cs)]
    return all(certainly_lt(b, a) for a, b in zip(vals, vals[1:]))


def cond1_monotone_in_k(c, ks: Sequence[int]) -> bool:
    vals = [cond1_max_ratio(c, k) for k in sorted(ks)]
    return all(certainly_lt(a, b) for a, b in zip(vals, vals[1:]))


def exchange_increases_ratio(k: int, c, rho: RhoProfile, i: int, j: int, amount) -> bool:
    """Moving ``amount`` of φ-mass from index i to a larger index j does not lower N/D."""
    if not i < j:
        raise PreconditionError("need i < j")
    terms = dict((ii, v) for ii, v in iter_phi(k, c))
    N = sum((to_arb(rho[ii]) * v for ii, v in terms.items()), arb(0))
    D = sum((to_arb(rho[ii]) * v * (ii + 1) / ii for ii, v in terms.items()), arb(0))
    a = to_arb(amount)
    N2 = N
    D2 = D - a * (i + 1) / i + a * (j + 1) / j
    return certainly_le(N / D, N2 / D2)


def profile_search(c, k: int, rho_grid: Sequence = tuple(Fraction(x, 10) for x in range(11))) -> dict:
    """Best one-step profile (0,...,0,ρ_t,1,...,1) by the smaller of the two gaps.

    Exploratory only; no pass/fail claim is attached.
    """
    c = _as_c(c)
    best = None
    for t in range(1, k):
        for r in rho_grid:
            rho = RhoProfile.step(k, [0] * (t - 1) + [r])
            if rho.is_zero():
                continue
            sums = phi_sums(k, c, rho)
            cons = as_float(cond1_max_ratio(c, k) - sums.ratio)
            rob = as_float(robustness_rhs(c, k) - sums.N)
            score = min(cons, rob)
            if best is None or score > best["score"]:
                best = {"k": k, "step": t, "rho_step": str(r), "consistency_gap": cons,
                        "robustness_gap": rob, "score": score}
    return best


# -- finite-size chain for decomposed families --------------------------------

@dataclass
class SizeChainRow:
    i: int
    part_size: int
    count_bound: Fraction  # C(i(s+1)-1, i+1) C(m+1-(i+1)(s+1), k-i-1) / C(m,k)
    product_bound: Fraction  # C(k,i+1)(i(s+1))^{i+1}(m+2-(i+1)(s+1))^{k-i-1}/(m+1)^k
    phi: Fraction  # φ(k,i,c') with c' = m/((k-1)(s+1))
    correction: Fraction  # product_bound / phi, computed exactly

    @property
    def ok(self) -> bool:
        return self.count_bound <= self.product_bound


@dataclass
class SizeChainReport:
    m: int
    k: int
    s: int
    c_prime: Fraction
    rows: list
    density: Fraction

    @property
    def parts_ok(self) -> bool:
        return all(Fraction(r.part_size, binom(self.m, self.k)) <= r.count_bound for r in self.rows)

    @property
    def chain_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def total_ok(self) -> bool:
        return self.density <= sum((r.correction * r.phi for r in self.rows), Fraction(0))

    @property
    def max_correction(self) -> Fraction:
        return max((r.correction for r in self.rows), default=Fraction(1))


def size_chain(g: Family, s: int) -> SizeChainReport:
    """Check |G_i|/C(m,k) against the exact count bound, its product form and
    φ(k,i,c') times an explicitly computed correction factor."""
    m, k = g.n, g.k
    if k < 2 or m <= k * (s + 1):
        raise PreconditionError(f"need k >= 2 and m > k(s+1), got m={m}, k={k}, s={s}")
    dec = tail_decompose(g, s)
    total = binom(m, k)
    cp = Fraction(m, (k - 1) * (s + 1))
    rows = []
    for i in range(1, k):
        size = len(dec.part(i))
        cnt = Fraction(binom(i * (s + 1) - 1, i + 1) * binom(m + 1 - (i + 1) * (s + 1), k - i - 1), total)
        prod = Fraction(binom(k, i + 1) * (i * (s + 1)) ** (i + 1) * (m + 2 - (i + 1) * (s + 1)) ** (k - i - 1),
                        (m + 1) ** k)
        ph = phi_exact(k, i, cp)
        rows.append(SizeChainRow(i, size, cnt, prod, ph, prod / ph))
    return SizeChainReport(m, k, s, cp, rows, Fraction(len(g), total))
