"""Fractional matchings and covers with exact certificates, and tiny-scale
searches for the largest families with fractional matching number below s+1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import binom, has_matching
from .errors import PreconditionError, ScaleLimitError
from .extremal import _disjoint_blocks, _Counter, DEFAULT_SEARCH_BUDGET
from .family import Family, KSet, Params, all_kset_masks, elements_of
from .simplex import solve_packing

LP_MAX_VARIABLES = 2000
M_STAR_MAX_SETS = 20


@dataclass(frozen=True)
class FractionalMatching:
    weights: dict[int, Fraction]  # set mask -> weight
    value: Fraction

    def loads(self, n: int) -> list[Fraction]:
        out = [Fraction(0)] * n
        for m, w in self.weights.items():
            for x in elements_of(m):
                out[x - 1] += w
        return out

    def is_valid(self, n: int) -> bool:
        return (all(0 <= w <= 1 for w in self.weights.values())
                and all(v <= 1 for v in self.loads(n))
                and sum(self.weights.values(), Fraction(0)) == self.value)


@dataclass(frozen=True)
class FractionalCover:
    vertex_weights: dict[int, Fraction]  # element -> weight
    total: Fraction

    def covers(self, f: Family) -> bool:
        return all(sum((self.vertex_weights.get(x, Fraction(0)) for x in elements_of(m)), Fraction(0)) >= 1
                   for m in f.masks)

    def is_valid(self, f: Family) -> bool:
        return (all(0 <= w <= 1 for w in self.vertex_weights.values())
                and self.covers(f)
                and sum(self.vertex_weights.values(), Fraction(0)) == self.total)


def frac_to_str(x: Fraction) -> str:
    return str(x)


def nu_star(f: Family) -> tuple[Fraction, FractionalMatching, FractionalCover]:
    """Exact fractional matching number with primal and dual certificates."""
    if len(f) > LP_MAX_VARIABLES:
        raise ScaleLimitError(f"{len(f)} LP variables exceed the limit {LP_MAX_VARIABLES}")
    if not f.masks:
        return Fraction(0), FractionalMatching({}, Fraction(0)), FractionalCover({}, Fraction(0))
    if f.k == 0:
        raise PreconditionError("fractional matchings of empty sets are unbounded")
    used = sorted({x for m in f.masks for x in elements_of(m)})
    A = [[1 if m >> (v - 1) & 1 else 0 for m in f.masks] for v in used]
    sol = solve_packing(A, [1] * len(used), [1] * len(f))
    fm = FractionalMatching({m: w for m, w in zip(f.masks, sol.x) if w}, sol.value)
    fc = FractionalCover({v: y for v, y in zip(used, sol.y) if y}, sum(sol.y, Fraction(0)))
    # strong duality and both feasibilities, exactly
    assert fm.value == fc.total, (fm.value, fc.total)
    assert fm.is_valid(f.n) and fc.is_valid(f)
    return sol.value, fm, fc


def nu_star_value(masks, n: int, k: int) -> Fraction:
    return nu_star(Family(n, k, tuple(masks)))[0]


def certificate_json(f: Family) -> dict:
    value, fm, fc = nu_star(f)
    return {
        "value": frac_to_str(value),
        "matching": [{"set": list(elements_of(m)), "weight": frac_to_str(w)}
                     for m, w in sorted(fm.weights.items(), key=lambda kv: elements_of(kv[0]))],
        "cover": {str(v): frac_to_str(w) for v, w in sorted(fc.vertex_weights.items())},
        "strong_duality": fm.value == fc.total,
    }


def _search_frac(allm: list[int], n: int, k: int, s: int, counter: _Counter,
                 score, score_bound) -> tuple[int, list[int]]:
    """Include/exclude search over subfamilies with ν* < s+1.

    ``score(chosen)`` is maximised; ``score_bound(chosen, cands)`` must bound
    the score of every feasible extension.
    """
    limit = s + 1
    best_score, best = -1, []

    def feasible(fam: list[int]) -> bool:
        if has_matching(fam, limit, k):
            return False
        return nu_star_value(fam, n, k) < limit

    def rec(chosen: list[int], cands: list[int]) -> None:
        nonlocal best_score, best
        counter.tick()
        sc = score(chosen)
        if sc > best_score:
            best_score, best = sc, list(chosen)
        if not cands or score_bound(chosen, cands) <= best_score:
            return
        f, rest = cands[0], cands[1:]
        taken = chosen + [f]
        if feasible(taken):
            rec(taken, rest)
        rec(chosen, rest)

    rec([], list(allm))
    return best_score, best


def m_star_small(p: Params, budget: int = DEFAULT_SEARCH_BUDGET) -> tuple[int, Family]:
    """Largest family in C([n],k) whose fractional matching number is below s+1."""
    n, k, s = p.n, p.k, p.s
    total = binom(n, k)
    if total > M_STAR_MAX_SETS:
        raise ScaleLimitError(f"C({n},{k}) = {total} exceeds the limit {M_STAR_MAX_SETS}")
    allm = all_kset_masks(n, k)
    blocks = _disjoint_blocks(allm)
    block_of = {m: i for i, bl in enumerate(blocks) for m in bl}

    def bound(chosen, cands):
        cnt = [0] * len(blocks)
        for m in chosen:
            cnt[block_of[m]] += 1
        for m in cands:
            cnt[block_of[m]] += 1
        return min(len(chosen) + len(cands), sum(min(s, c) for c in cnt))

    best, fam = _search_frac(allm, n, k, s, _Counter(budget), len, bound)
    return best, Family(n, k, tuple(fam))


def min_degree(masks, n: int, d: int) -> int:
    """Minimum over d-subsets S of [n] of the number of members containing S."""
    best = None
    for S in itertools.combinations(range(n), d):
        sm = sum(1 << x for x in S)
        c = sum(1 for m in masks if m & sm == sm)
        best = c if best is None else min(best, c)
    return best if best is not None else 0


def m_star_degree_small(n: int, k: int, s: int, d: int,
                        budget: int = DEFAULT_SEARCH_BUDGET) -> tuple[int, Family]:
    """Largest minimum d-degree among families with ν* < s+1 (tiny scale only)."""
    total = binom(n, k)
    if total > M_STAR_MAX_SETS:
        raise ScaleLimitError(f"C({n},{k}) = {total} exceeds the limit {M_STAR_MAX_SETS}")
    allm = all_kset_masks(n, k)
    dsets = [sum(1 << x for x in S) for S in itertools.combinations(range(n), d)]

    def score(chosen):
        return min_degree(chosen, n, d)

    def bound(chosen, cands):
        pool = chosen + cands
        return min(sum(1 for m in pool if m & S == S) for S in dsets)

    best, fam = _search_frac(allm, n, k, s, _Counter(budget), score, bound)
    return best, Family(n, k, tuple(fam))


@dataclass(frozen=True)
class DegreeReductionCheck:
    n: int
    k: int
    s: int
    d: int
    lhs: int  # max min-d-degree with ν* < s+1 on C([n],k)
    rhs: int  # max size with ν* < s+1 on C([n-d],k-d)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def degree_reduction_check(n: int, k: int, s: int, d: int = 1) -> DegreeReductionCheck:
    if not (1 <= d < k):
        raise PreconditionError(f"need 1 <= d < k, got d={d}, k={k}")
    if n < k * (s + 1):
        raise PreconditionError(f"need n >= k(s+1) = {k * (s + 1)}, got n={n}")
    lhs, _ = m_star_degree_small(n, k, s, d)
    if k - d == 0:
        rhs = 1 if s >= 1 else 0
    else:
        rhs, _ = m_star_small(Params(n - d, k - d, s))
    return DegreeReductionCheck(n, k, s, d, lhs, rhs)


def kset_weight_map(fm: FractionalMatching) -> dict[KSet, Fraction]:
    return {KSet(m): w for m, w in fm.weights.items()}
