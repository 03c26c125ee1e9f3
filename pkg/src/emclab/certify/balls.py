"""Thin layer over arb balls: precision control, exact conversion and
fail-closed comparisons.

Every comparison here returns True only when it holds for every point of
both balls; an overlap counts as False.
"""

from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

from flint import arb, ctx

DEFAULT_PRECISION = 128


@contextmanager
def precision(bits: int | None):
    old = ctx.prec
    ctx.prec = DEFAULT_PRECISION if bits is None else int(bits)
    try:
        yield ctx.prec
    finally:
        ctx.prec = old


def to_arb(x) -> arb:
    """Exact where possible: ints and Fractions go through integer division."""
    if isinstance(x, arb):
        return x
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return arb(x)
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, float):
        x = Fraction(x)
    if isinstance(x, Fraction):
        return arb(x.numerator) / x.denominator
    raise TypeError(f"cannot convert {type(x).__name__} to a ball")


def _dyadic(x: arb) -> Fraction:
    man, exp = x.man_exp()
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def lower(x: arb) -> Fraction:
    if not x.is_finite():
        raise ValueError("unbounded ball")
    return _dyadic(x.lower())


def upper(x: arb) -> Fraction:
    if not x.is_finite():
        raise ValueError("unbounded ball")
    return _dyadic(x.upper())


def radius(x: arb) -> float:
    return float(_dyadic(x.rad())) if x.is_finite() else float("inf")


def from_bounds(lo: arb, hi: arb) -> arb:
    """Smallest ball this layer can form around [lo, hi]."""
    return lo.union(hi)


def nonneg_upto(t: arb) -> arb:
    """The interval [0, upper(t)], for one-sided error terms."""
    return arb(0).union(t)


def certainly_le(a, b) -> bool:
    return bool(to_arb(a) <= to_arb(b))


def certainly_lt(a, b) -> bool:
    return bool(to_arb(a) < to_arb(b))


def certainly_ge(a, b) -> bool:
    return bool(to_arb(a) >= to_arb(b))


def certainly_gt(a, b) -> bool:
    return bool(to_arb(a) > to_arb(b))


def ball_json(x: arb, digits: int = 20) -> dict:
    """Midpoint for reading, exact dyadic endpoints for re-checking."""
    lo, hi = x.lower().man_exp(), x.upper().man_exp()
    lo, hi = tuple(map(int, lo)), tuple(map(int, hi))
    return {
        "mid": x.mid().str(digits, radius=False),
        "rad": radius(x),
        "lower": f"{lo[0]}*2^{lo[1]}",
        "upper": f"{hi[0]}*2^{hi[1]}",
    }


def as_float(x: arb) -> float:
    return float(x.mid())
