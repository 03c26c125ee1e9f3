"""Kneser graph parameters and the expander-mixing bound for induced edges.

KG(m, l) has the l-subsets of [m] as vertices, joined when disjoint. It is
D-regular with D = C(m-l, l), and its second-largest eigenvalue in absolute
value is C(m-l-1, l-1). All checks below are exact (Fractions).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import binom
from .errors import PreconditionError
from .family import Family


@dataclass(frozen=True)
class KneserParams:
    m: int
    l: int
    M: int  # vertices
    D: int  # degree
    lam: int  # second-largest |eigenvalue|

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.lam, self.D)


def kneser_params(m: int, l: int) -> KneserParams:
    if l < 1 or m < 2 * l:
        raise PreconditionError(f"need m >= 2l >= 2, got m={m}, l={l}")
    kp = KneserParams(m, l, binom(m, l), binom(m - l, l), binom(m - l - 1, l - 1))
    assert kp.ratio == Fraction(l, m - l)
    return kp


def ratio_below_reciprocal(m: int, l: int, t: int) -> bool:
    """λ/D <= 1/(t-1), which holds whenever m >= t*l."""
    if t < 2:
        return True
    return kneser_params(m, l).ratio <= Fraction(1, t - 1)


def induced_edges(g: Family) -> int:
    """Number of unordered disjoint pairs inside g."""
    masks = g.masks
    total = 0
    for i, a in enumerate(masks):
        for b in masks[i + 1:]:
            if not a & b:
                total += 1
    return total


@dataclass(frozen=True)
class AlonChungReport:
    edges: int
    alpha: Fraction
    deviation: Fraction  # |e - α² D M / 2|
    bound: Fraction  # λ α (1-α) M / 2
    joint_probability: Fraction  # e / (D M / 2)
    joint_deviation: Fraction  # |P - α²|
    joint_bound: Fraction  # λ α (1-α) / D

    @property
    def holds(self) -> bool:
        return self.deviation <= self.bound

    @property
    def joint_holds(self) -> bool:
        return self.joint_deviation <= self.joint_bound

    @property
    def margin(self) -> Fraction:
        return self.bound - self.deviation


def check_alon_chung(g: Family, m: int | None = None) -> AlonChungReport:
    """Exact comparison of e(g) with its expander-mixing estimate in KG(m, l)."""
    m = g.n if m is None else m
    kp = kneser_params(m, g.k)
    if any(x >> m for x in g.masks):
        raise PreconditionError(f"family is not inside [{m}]")
    e = induced_edges(g)
    alpha = Fraction(len(g), kp.M)
    dev = abs(e - alpha * alpha * kp.D * kp.M / 2)
    bound = Fraction(kp.lam) * alpha * (1 - alpha) * kp.M / 2
    p = Fraction(2 * e, kp.D * kp.M)
    jdev = abs(p - alpha * alpha)
    jbound = Fraction(kp.lam) * alpha * (1 - alpha) / kp.D
    return AlonChungReport(e, alpha, dev, bound, p, jdev, jbound)
