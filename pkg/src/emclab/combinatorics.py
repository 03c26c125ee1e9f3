"""Exact combinatorics on uniform families: sizes of the extremal
constructions, the shifting order, shadows, matchings, restrictions,
tail decompositions and diversity.

Everything here works on integer bitmasks internally (see :mod:`emclab.family`)
and returns exact Python ints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import PreconditionError, ScaleLimitError
from .family import Family, KSet, Params, all_kset_masks, elements_of, mask_of

DEFAULT_NODE_BUDGET = 5_000_000
DEFAULT_DIVERSITY_BUDGET = 200_000


def binom(n: int, k: int) -> int:
    if n < 0 or k < 0:
        raise PreconditionError(f"binom needs n, k >= 0, got ({n}, {k})")
    return math.comb(n, k)


def size_A(p: Params) -> int:
    """Number of k-sets of [n] meeting [s], checked against the telescoping sum."""
    direct = binom(p.n, p.k) - binom(max(p.n - p.s, 0), p.k)
    telescoped = sum(binom(p.n - i, p.k - 1) for i in range(1, min(p.s, p.n) + 1))
    assert direct == telescoped, (p, direct, telescoped)
    return direct


def size_A0(k: int, s: int) -> int:
    if k < 1 or s < 0:
        raise PreconditionError(f"need k >= 1, s >= 0, got k={k}, s={s}")
    return binom(k * (s + 1) - 1, k)


@dataclass(frozen=True)
class ConjectureValue:
    value: int
    size_A: int
    size_A0: int
    dominant: str  # "A", "A0" or "tie"
    crossover_claim_applies: bool  # n >= (k+1)s
    crossover_claim_holds: bool  # size_A >= size_A0 whenever the claim applies


def conjectured(p: Params) -> ConjectureValue:
    if p.n < p.k * (p.s + 1):
        raise PreconditionError(f"need n >= k(s+1) = {p.k * (p.s + 1)}, got n={p.n}")
    a, a0 = size_A(p), size_A0(p.k, p.s)
    dominant = "tie" if a == a0 else ("A" if a > a0 else "A0")
    applies = p.n >= (p.k + 1) * p.s
    return ConjectureValue(max(a, a0), a, a0, dominant, applies, (not applies) or a >= a0)


def conjectured_m(p: Params) -> int:
    return conjectured(p).value


# ── shifting order ───────────────────────────────────────────────────────────

def _as_mask(x: KSet | int) -> int:
    return x.mask if isinstance(x, KSet) else x


def shift_precedes(a: KSet | int, b: KSet | int) -> bool:
    """Strict shifting order: sorted coordinates of a are dominated by those of b."""
    ma, mb = _as_mask(a), _as_mask(b)
    if ma.bit_count() != mb.bit_count():
        raise PreconditionError("shift_precedes compares sets of equal size only")
    if ma == mb:
        return False
    return all(x <= y for x, y in zip(elements_of(ma), elements_of(mb)))


def lower_covers(mask: int) -> list[int]:
    """Sets obtained by decrementing one element x to x-1 (x-1 absent).

    These generate the shifting order: G precedes F iff G is reachable from F
    by a chain of such moves.
    """
    out = []
    m = mask
    while m:
        low = m & -m
        m ^= low
        if low > 1 and not mask & (low >> 1):
            out.append(mask ^ low ^ (low >> 1))
    return out


def is_initial(f: Family) -> bool:
    present = f._maskset
    return all(g in present for m in f.masks for g in lower_covers(m))


def compress(f: Family) -> Family:
    """Apply (i,j)-exchange shifts until nothing moves; the result is initial."""
    cur = set(f.masks)
    changed = True
    while changed:
        changed = False
        for j in range(2, f.n + 1):
            bj = 1 << (j - 1)
            for i in range(1, j):
                bi = 1 << (i - 1)
                moved = []
                for m in cur:
                    if m & bj and not m & bi:
                        t = m ^ bj ^ bi
                        if t not in cur:
                            moved.append((m, t))
                if moved:
                    changed = True
                    for m, t in moved:
                        cur.discard(m)
                        cur.add(t)
    out = f.with_masks(cur)
    assert len(out) == len(f)
    assert is_initial(out)
    return out


# ── shadows ──────────────────────────────────────────────────────────────────

def shadow_masks(masks: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for m in masks:
        r = m
        while r:
            low = r & -r
            r ^= low
            out.add(m ^ low)
    return out


def shadow(f: Family) -> Family:
    if f.k < 1:
        raise PreconditionError("shadow of a 0-uniform family is undefined")
    return Family(f.n, f.k - 1, tuple(shadow_masks(f.masks)))


# ── matchings ────────────────────────────────────────────────────────────────

class _Budget:
    __slots__ = ("left",)

    def __init__(self, nodes: int):
        self.left = nodes

    def tick(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise ScaleLimitError("matching search exceeded its node budget")


def has_matching(masks: Sequence[int], size: int, k: int, budget: int | None = None) -> bool:
    """Is there a matching of ``size`` pairwise disjoint sets among ``masks``?

    Branches on the smallest uncovered vertex: either one of the sets through
    it is used, or the vertex is discarded.
    """
    if size <= 0:
        return True
    if k == 0:
        return size <= 1 and len(masks) >= size
    b = _Budget(budget if budget is not None else DEFAULT_NODE_BUDGET)

    def rec(cands: list[int], need: int) -> bool:
        if need == 0:
            return True
        if len(cands) < need:
            return False
        b.tick()
        u = 0
        for g in cands:
            u |= g
        if u.bit_count() // k < need:
            return False
        v = u & -u
        for f in cands:
            if f & v and rec([g for g in cands if not g & f], need - 1):
                return True
        return rec([g for g in cands if not g & v], need)

    return rec(list(masks), size)


def max_matching(masks: Sequence[int], k: int, budget: int | None = None,
                 limit: int | None = None) -> list[int]:
    """A maximum matching (as masks). Stops early once ``limit`` sets are found."""
    masks = sorted(set(masks), key=elements_of)
    if not masks:
        return []
    if k == 0:
        return masks[:1]
    b = _Budget(budget if budget is not None else DEFAULT_NODE_BUDGET)
    best: list[int] = []
    cap = limit if limit is not None else math.inf
    chosen: list[int] = []

    def rec(cands: list[int]) -> bool:
        nonlocal best
        b.tick()
        if len(chosen) > len(best):
            best = list(chosen)
            if len(best) >= cap:
                return True
        if not cands:
            return False
        u = 0
        for g in cands:
            u |= g
        if len(chosen) + min(len(cands), u.bit_count() // k) <= len(best):
            return False
        v = u & -u
        for f in cands:
            if f & v:
                chosen.append(f)
                done = rec([g for g in cands if not g & f])
                chosen.pop()
                if done:
                    return True
        return rec([g for g in cands if not g & v])

    rec(masks)
    return best


def matching_number(f: Family, budget: int | None = None) -> int:
    return len(max_matching(f.masks, f.k, budget))


# ── restriction, tails, restricted shadows ──────────────────────────────────

def restrict(f: Family, S: KSet | Iterable[int], prefix: int, reindex: bool = True) -> Family:
    """Sets F with F ∩ [prefix] = S, with S removed.

    With ``reindex`` the survivors live on [prefix+1, n] relabelled to
    [1, n-prefix]; otherwise they keep their labels inside [n].
    """
    smask = S.mask if isinstance(S, KSet) else mask_of(S)
    pmask = (1 << prefix) - 1
    if smask & ~pmask:
        raise PreconditionError(f"S={elements_of(smask)} is not inside [{prefix}]")
    kk = f.k - smask.bit_count()
    if kk < 0:
        return Family(f.n, 0, ())
    picked = [m ^ smask for m in f.masks if m & pmask == smask]
    if not reindex:
        return Family(f.n, kk, tuple(picked))
    return Family(max(f.n - prefix, 0), kk, tuple(m >> prefix for m in picked))


def spread_set(k: int, s: int) -> int:
    """(s+1, 2(s+1), ..., k(s+1)): the set no initial family with ν ≤ s contains."""
    return mask_of(i * (s + 1) for i in range(1, k + 1))


def prefix_count(mask: int, length: int) -> int:
    return (mask & ((1 << max(length, 0)) - 1)).bit_count()


def spread_witness(mask: int, s: int) -> int | None:
    """Some i in [1,k] with |F ∩ [i(s+1)-1]| >= i, or None."""
    k = mask.bit_count()
    for i in range(1, k + 1):
        if prefix_count(mask, i * (s + 1) - 1) >= i:
            return i
    return None


def tail_index(mask: int, s: int) -> int | None:
    """Largest i in [1,k) with |F ∩ [i(s+1)-1]| >= i+1, or None."""
    k = mask.bit_count()
    for i in range(k - 1, 0, -1):
        if prefix_count(mask, i * (s + 1) - 1) >= i + 1:
            return i
    return None


@dataclass
class TailDecomposition:
    n: int
    k: int
    s: int
    parts: dict[int, list[int]] = field(default_factory=dict)  # i -> masks of G_i
    tails: dict[int, int] = field(default_factory=dict)  # F -> T(F)
    violations: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def part(self, i: int) -> Family:
        return Family(self.n, self.k, tuple(self.parts.get(i, ())))

    def by_tail(self) -> dict[int, list[int]]:
        groups: dict[int, list[int]] = {}
        for m, t in self.tails.items():
            groups.setdefault(t, []).append(m)
        return groups


def tail_decompose(g: Family, s: int, strict: bool = True) -> TailDecomposition:
    """Split g by the largest prefix index i with |F ∩ [i(s+1)-1]| >= i+1.

    The tail of F is what lies beyond that prefix; it has exactly k-i-1
    elements. Sets with no valid index are collected as violations and,
    when ``strict``, raise.
    """
    dec = TailDecomposition(g.n, g.k, s)
    for m in g.masks:
        i = tail_index(m, s)
        if i is None:
            dec.violations.append(m)
            continue
        tail = m & ~((1 << (i * (s + 1) - 1)) - 1)
        assert tail.bit_count() == g.k - i - 1
        dec.parts.setdefault(i, []).append(m)
        dec.tails[m] = tail
    if strict and dec.violations:
        shown = ", ".join(str(elements_of(v)) for v in dec.violations[:5])
        raise PreconditionError(
            f"{len(dec.violations)} set(s) admit no index i<k with |F ∩ [i(s+1)-1]| >= i+1: {shown}")
    return dec


def restricted_shadow_masks(masks: Iterable[int], tail: int) -> set[int]:
    out: set[int] = set()
    for m in masks:
        if m & tail != tail:
            raise PreconditionError(f"set {elements_of(m)} does not contain tail {elements_of(tail)}")
        r = m & ~tail
        while r:
            low = r & -r
            r ^= low
            out.add(m ^ low)
    return out


def restricted_shadow(g_plus_T: Family, T: KSet | Iterable[int]) -> Family:
    """(k-1)-sets F' with T ⊆ F' ⊂ F for some member F."""
    tmask = T.mask if isinstance(T, KSet) else mask_of(T)
    if g_plus_T.k < 1:
        return Family(g_plus_T.n, 0, ())
    return Family(g_plus_T.n, g_plus_T.k - 1,
                  tuple(restricted_shadow_masks(g_plus_T.masks, tmask)))


def restricted_shadows(dec: TailDecomposition) -> dict[int, set[int]]:
    """Restricted shadow of every tail class, asserting they are pairwise disjoint."""
    out: dict[int, set[int]] = {}
    owner: dict[int, int] = {}
    for tail, members in dec.by_tail().items():
        sh = restricted_shadow_masks(members, tail)
        for h in sh:
            prev = owner.setdefault(h, tail)
            assert prev == tail, (
                f"restricted shadows of tails {elements_of(prev)} and {elements_of(tail)} "
                f"share {elements_of(h)}")
        out[tail] = sh
    return out


def restricted_shadow_sizes(dec: TailDecomposition) -> dict[int, int]:
    """|∂_r(G_i)| for each part index i."""
    sizes: dict[int, int] = {}
    for tail, sh in restricted_shadows(dec).items():
        i = dec.k - 1 - tail.bit_count()
        sizes[i] = sizes.get(i, 0) + len(sh)
    return sizes


# ── diversity ────────────────────────────────────────────────────────────────

def diversity(f: Family, s: int, budget: int = DEFAULT_DIVERSITY_BUDGET) -> int:
    """Minimum over s-sets T of the number of members avoiding T."""
    if s < 0 or s > f.n:
        raise PreconditionError(f"need 0 <= s <= n, got s={s}, n={f.n}")
    if binom(f.n, s) > budget:
        raise ScaleLimitError(f"C({f.n},{s}) = {binom(f.n, s)} s-sets exceed the budget {budget}")
    if not f.masks:
        return 0
    best = len(f)
    for t in itertools.combinations(range(f.n), s):
        tm = 0
        for x in t:
            tm |= 1 << x
        c = sum(1 for m in f.masks if not m & tm)
        if c < best:
            best = c
            if best == 0:
                break
    return best


def diversity_initial(f: Family, s: int) -> int:
    """|f({s+1})| + |f(∅)|, the value of diversity() on initial families."""
    pm = (1 << (s + 1)) - 1
    top = 1 << s
    return sum(1 for m in f.masks if m & pm in (0, top))


def diversity_conjecture_bound(n: int, k: int, s: int) -> int:
    first = sum(binom(s + 1, l) * binom(n - 2 * s - 1, k - l)
                for l in range(2, s + 2) if k - l >= 0 and n - 2 * s - 1 >= 0)
    return max(first, binom((k - 1) * (s + 1), k))


# ── shadow checks on one family ─────────────────────────────────────────────

@dataclass
class ShadowReport:
    n: int
    k: int
    s: int
    size: int
    compressed: bool  # input was not initial and was compressed first
    matching: int
    spread_absent: bool  # (s+1, 2(s+1), ..., k(s+1)) not a member
    spread_witness_ok: bool  # every member has |F ∩ [i(s+1)-1]| >= i for some i
    shadow_size: int
    g_size: int  # |f(∅)|
    g_shadow_matching: int  # ν(∂ f(∅))
    parts: dict = field(default_factory=dict)  # i -> |G_i|
    restricted: dict = field(default_factory=dict)  # i -> |∂_r G_i|
    disjoint_ok: bool = True
    decomposition_ok: bool = True

    @property
    def shadow_bound_ok(self) -> bool:
        return self.s * self.shadow_size >= self.size

    @property
    def prop_shadow_matching_ok(self) -> bool:
        return self.g_shadow_matching <= self.s

    @property
    def good_shadow_ok(self) -> bool:
        # |∂_r G_i| >= (i+1)/(i s) |G_i|
        return all(self.restricted.get(i, 0) * i * self.s >= (i + 1) * sz for i, sz in self.parts.items())

    @property
    def ok(self) -> bool:
        return (self.matching <= self.s and self.spread_absent and self.spread_witness_ok
                and self.shadow_bound_ok and self.prop_shadow_matching_ok and self.disjoint_ok
                and self.decomposition_ok and self.good_shadow_ok)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "s": self.s, "size": self.size, "compressed": self.compressed,
            "matching": self.matching, "spread_absent": self.spread_absent,
            "spread_witness_ok": self.spread_witness_ok, "shadow_size": self.shadow_size,
            "shadow_bound_ok": self.shadow_bound_ok, "g_size": self.g_size,
            "g_shadow_matching": self.g_shadow_matching,
            "prop_shadow_matching_ok": self.prop_shadow_matching_ok,
            "parts": {str(i): v for i, v in sorted(self.parts.items())},
            "restricted_shadows": {str(i): v for i, v in sorted(self.restricted.items())},
            "disjoint_ok": self.disjoint_ok, "decomposition_ok": self.decomposition_ok,
            "good_shadow_ok": self.good_shadow_ok, "ok": self.ok,
        }


def shadow_report(f: Family, s: int, budget: int | None = None) -> ShadowReport:
    """Run the shadow inequalities on an initial family with ν ≤ s.

    A non-initial input is compressed first. f(∅) is taken with prefix
    [s+1] and relabelled, then split into tail classes.
    """
    if s < 1:
        raise PreconditionError(f"need s >= 1, got {s}")
    compressed = not is_initial(f)
    if compressed:
        f = compress(f)
    nu = matching_number(f, budget)
    if nu > s:
        raise PreconditionError(f"family has matching number {nu} > s = {s}")
    spread = spread_set(f.k, s)
    rep = ShadowReport(
        f.n, f.k, s, len(f), compressed, nu,
        spread not in f,
        all(spread_witness(m, s) is not None for m in f.masks),
        len(shadow_masks(f.masks)) if f.k >= 1 else 0, 0, 0)
    g = restrict(f, (), s + 1)
    rep.g_size = len(g)
    if g.k >= 2 and g.masks:
        rep.g_shadow_matching = len(max_matching(sorted(shadow_masks(g.masks)), g.k - 1, budget))
        dec = tail_decompose(g, s, strict=False)
        rep.decomposition_ok = dec.ok
        rep.parts = {i: len(v) for i, v in dec.parts.items()}
        try:
            rep.restricted = restricted_shadow_sizes(dec)
        except AssertionError:
            rep.disjoint_ok = False
    return rep


__all__ = [
    "binom", "size_A", "size_A0", "conjectured", "conjectured_m", "ConjectureValue",
    "shift_precedes", "lower_covers", "is_initial", "compress", "shadow", "shadow_masks",
    "has_matching", "max_matching", "matching_number", "restrict", "spread_set",
    "spread_witness", "tail_index", "tail_decompose", "TailDecomposition",
    "restricted_shadow", "restricted_shadows", "restricted_shadow_sizes",
    "diversity", "diversity_initial", "diversity_conjecture_bound", "all_kset_masks",
    "ShadowReport", "shadow_report",
]
