"""Exact maximum family sizes under a matching constraint, at tiny scale.

Two exact searches are provided:

* ``full``: branch and bound over all subfamilies of C([n], k). The first set
  is fixed to [k] by symmetry; every later set is either taken (if it does not
  complete an (s+1)-matching) or dropped.
* ``initial``: the same idea restricted to initial families. Sets are visited
  in a linear extension of the shifting order, and a set may be taken only
  when all of its lower covers were taken. Compression guarantees the optimum
  is attained by an initial family, so both modes must agree.

Both use the same upper bound: greedily split the candidate sets into blocks
of pairwise disjoint sets; a family with ν ≤ s keeps at most s from each block.

Also here: rainbow-matching (cross-dependence) checks, the cover-counting
bound for nested cross-dependent families against a fixed matching, and a
Monte-Carlo check of the averaging argument over random full partitions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combinatorics import (
    binom, conjectured_m, has_matching, is_initial, lower_covers, matching_number,
)
from .errors import PreconditionError, ScaleLimitError
from .family import Family, KSet, Params, all_kset_masks, elements_of

FULL_MODE_MAX_SETS = 36
INITIAL_MODE_MAX_SETS = 600
DEFAULT_SEARCH_BUDGET = 20_000_000


@dataclass
class SearchResult:
    optimum: int
    witness: Family
    nodes_explored: int
    restricted_to_initial: bool
    params: Params | None = None
    seconds: float = 0.0


def _disjoint_blocks(masks: Sequence[int]) -> list[list[int]]:
    blocks: list[list[int]] = []
    rest = list(masks)
    while rest:
        block, used, left = [], 0, []
        for m in rest:
            if m & used:
                left.append(m)
            else:
                block.append(m)
                used |= m
        blocks.append(block)
        rest = left
    return blocks


class _Counter:
    def __init__(self, budget: int):
        self.budget = budget
        self.nodes = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise ScaleLimitError(f"search exceeded {self.budget} nodes")


def _completes_matching(chosen: list[int], f: int, s: int, k: int) -> bool:
    """Would adding f to chosen create a matching of size s+1?"""
    return has_matching([h for h in chosen if not h & f], s, k)


def _search_full(n: int, k: int, s: int, counter: _Counter) -> list[int]:
    allm = all_kset_masks(n, k)
    blocks = _disjoint_blocks(allm)
    block_of = {m: b for b, bl in enumerate(blocks) for m in bl}
    nblocks = len(blocks)
    best: list[int] = []

    def bound(chosen: list[int], cands: list[int]) -> int:
        cnt = [0] * nblocks
        for m in chosen:
            cnt[block_of[m]] += 1
        for m in cands:
            cnt[block_of[m]] += 1
        return sum(min(s, c) for c in cnt)

    def rec(chosen: list[int], cands: list[int]) -> None:
        nonlocal best
        counter.tick()
        if len(chosen) > len(best):
            best = list(chosen)
        if not cands or len(chosen) + len(cands) <= len(best):
            return
        if bound(chosen, cands) <= len(best):
            return
        f, rest = cands[0], cands[1:]
        taken = chosen + [f]
        rec(taken, [g for g in rest if not _completes_matching(taken, g, s, k)])
        rec(chosen, rest)

    # any nonempty family can be relabelled to contain [k]
    first = allm[0]
    rec([first], [g for g in allm[1:] if not _completes_matching([first], g, s, k)])
    return best


def _search_initial(n: int, k: int, s: int, counter: _Counter) -> list[int]:
    order = sorted(all_kset_masks(n, k), key=lambda m: (sum(elements_of(m)), elements_of(m)))
    index = {m: i for i, m in enumerate(order)}
    covers = [[index[g] for g in lower_covers(m)] for m in order]
    N = len(order)
    blocks = _disjoint_blocks(all_kset_masks(n, k))
    block_of = [0] * N
    for b, bl in enumerate(blocks):
        for m in bl:
            block_of[index[m]] = b
    nblocks = len(blocks)

    state = [0] * N  # 1 taken, -1 dropped, 0 open
    chosen: list[int] = []
    best: list[int] = []

    def bound(pos: int) -> int:
        avail = [False] * N
        cnt = [0] * nblocks
        for j in range(N):
            if state[j] == 1:
                avail[j] = True
            elif state[j] == 0 and j >= pos and all(avail[c] for c in covers[j]):
                if s == 1 and any(not order[j] & c for c in chosen):
                    continue
                avail[j] = True
            else:
                continue
            cnt[block_of[j]] += 1
        return sum(min(s, c) for c in cnt)

    def rec(pos: int) -> None:
        nonlocal best
        counter.tick()
        if len(chosen) > len(best):
            best = list(chosen)
        if bound(pos) <= len(best):
            return
        j = pos
        forced = []
        while j < N and not (state[j] == 0 and all(state[c] == 1 for c in covers[j])):
            if state[j] == 0:
                state[j] = -1  # some lower cover was dropped
                forced.append(j)
            j += 1
        if j < N:
            f = order[j]
            if not _completes_matching(chosen, f, s, k):
                state[j] = 1
                chosen.append(f)
                rec(j + 1)
                chosen.pop()
            state[j] = -1
            rec(j + 1)
            state[j] = 0
        for t in forced:
            state[t] = 0

    rec(0)
    return best


def exact_m(p: Params, mode: str = "full", relaxed: bool = False,
            budget: int = DEFAULT_SEARCH_BUDGET, max_sets: int | None = None) -> SearchResult:
    """Exact maximum |f| over f ⊆ C([n],k) with ν(f) ≤ s.

    ``relaxed`` admits n < k(s+1), where the answer is simply C(n,k).
    """
    n, k, s = p.n, p.k, p.s
    if mode not in ("full", "initial"):
        raise PreconditionError(f"mode must be 'full' or 'initial', got {mode!r}")
    if n < k * (s + 1) and not relaxed:
        raise PreconditionError(f"need n >= k(s+1) = {k * (s + 1)}, got n={n} (use relaxed=True)")
    total = binom(n, k)
    cap = max_sets if max_sets is not None else (
        FULL_MODE_MAX_SETS if mode == "full" else INITIAL_MODE_MAX_SETS)
    if total > cap:
        raise ScaleLimitError(f"C({n},{k}) = {total} sets exceeds the {mode}-mode limit {cap}")
    t0 = time.perf_counter()
    counter = _Counter(budget)
    if s == 0:
        best: list[int] = []
    elif n < k * (s + 1):
        best = all_kset_masks(n, k)
    elif k == 1:
        best = all_kset_masks(n, 1)[:s]
    elif mode == "full":
        best = _search_full(n, k, s, counter)
    else:
        best = _search_initial(n, k, s, counter)
    witness = Family(n, k, tuple(best))
    assert matching_number(witness) <= s
    if mode == "initial":
        assert is_initial(witness)
    return SearchResult(len(best), witness, counter.nodes, mode == "initial", p,
                        time.perf_counter() - t0)


def erdos_gallai_value(n: int, s: int) -> int:
    return max(binom(n, 2) - binom(n - s, 2), binom(2 * s + 1, 2))


# ── cross-dependence ─────────────────────────────────────────────────────────

def rainbow_matching(fams: Sequence[Family], budget: int = DEFAULT_SEARCH_BUDGET) -> list[int] | None:
    """Pairwise disjoint representatives, one per family, or None."""
    if not fams:
        return []
    n, k = fams[0].n, fams[0].k
    for f in fams:
        if f.n != n or f.k != k:
            raise PreconditionError("families must share ground set and uniformity")
    order = sorted(range(len(fams)), key=lambda i: len(fams[i]))
    pools = [list(fams[i].masks) for i in order]
    counter = _Counter(budget)
    picked: list[int] = []

    def rec(level: int, used: int) -> bool:
        counter.tick()
        if level == len(pools):
            return True
        for m in pools[level]:
            if not m & used:
                picked.append(m)
                if rec(level + 1, used | m):
                    return True
                picked.pop()
        return False

    if not rec(0, 0):
        return None
    out = [0] * len(fams)
    for pos, i in enumerate(order):
        out[i] = picked[pos]
    return out


def _rainbow_exists(pools: list[list[int]]) -> bool:
    pools = sorted(pools, key=len)

    def rec(level: int, used: int) -> bool:
        if level == len(pools):
            return True
        return any(not g & used and rec(level + 1, used | g) for g in pools[level])

    return rec(0, 0)


def is_cross_dependent(fams: Sequence[Family], budget: int = DEFAULT_SEARCH_BUDGET) -> bool:
    return rainbow_matching(fams, budget) is None


# ── cover-counting bound against a fixed matching ────────────────────────────

@dataclass
class CoverScenario:
    families: list[Family]  # s+1 nested families, largest first
    matching: list[int]  # t pairwise disjoint masks
    q: int
    x: int
    s: int

    @property
    def t(self) -> int:
        return len(self.matching)


@dataclass
class CoverReport:
    lhs: int
    hits_last: int
    rhs_large: Fraction | None  # applies when hits_last >= x
    rhs_small: Fraction | None  # applies when hits_last <= x
    hypothesis_violations: list[str] = field(default_factory=list)

    @property
    def margins(self) -> dict[str, Fraction]:
        out = {}
        if self.rhs_large is not None:
            out["large"] = self.rhs_large - self.lhs
        if self.rhs_small is not None:
            out["small"] = self.rhs_small - self.lhs
        return out

    @property
    def hypotheses_ok(self) -> bool:
        return not self.hypothesis_violations

    @property
    def bound_holds(self) -> bool:
        return all(v >= 0 for v in self.margins.values())


def cover_hypothesis_violations(sc: CoverScenario, check_cross: bool = True) -> list[str]:
    bad = []
    s, x, q, t = sc.s, sc.x, sc.q, sc.t
    if len(sc.families) != s + 1:
        bad.append(f"expected {s + 1} families, got {len(sc.families)}")
    if not (1 <= x <= s + 1):
        bad.append(f"x={x} outside [1, s+1]")
    if not (1 <= q <= s + 1):
        bad.append(f"q={q} outside [1, s+1]")
    if t < s + x + 1:
        bad.append(f"t={t} < s+x+1={s + x + 1}")
    used = 0
    for m in sc.matching:
        if m & used:
            bad.append("matching sets are not pairwise disjoint")
            break
        used |= m
    for a, b in zip(sc.families, sc.families[1:]):
        if not b._maskset <= a._maskset:
            bad.append("families are not nested")
            break
    if check_cross and len(sc.families) == s + 1 and not is_cross_dependent(sc.families):
        bad.append("families are not cross-dependent")
    return bad


def verify_cover_bound(sc: CoverScenario, check_cross: bool = True) -> CoverReport:
    """Compare Σ_{i≤s}|B∩f_i| + q|B∩f_{s+1}| with its two upper bounds."""
    s, x, q, t = sc.s, sc.x, sc.q, sc.t
    hits = [sum(1 for m in sc.matching if m in f) for f in sc.families]
    last = hits[-1] if hits else 0
    lhs = sum(hits[:-1]) + q * last
    rhs_large = Fraction(s * t + q * last - s * x) if last >= x else None
    rhs_small = (Fraction(s * t) - last * (x - Fraction(q * last, s + 1))) if last <= x else None
    return CoverReport(lhs, last, rhs_large, rhs_small, cover_hypothesis_violations(sc, check_cross))


def random_cover_scenario(rng: np.random.Generator, s: int, t: int, l: int,
                          extra: int = 0) -> CoverScenario:
    """Random nested cross-dependent families on [t*l + extra] with a random t-matching.

    Sets are offered in random order and placed into f_1 ⊇ ... ⊇ f_j for a
    random depth j, keeping the placement only if no rainbow matching appears.
    """
    m = t * l + extra
    x = int(rng.integers(1, max(1, t - s - 1) + 1)) if t >= s + 2 else 1
    x = min(x, s + 1)
    q = int(rng.integers(1, s + 2))
    pool = all_kset_masks(m, l)
    members: list[list[int]] = [[] for _ in range(s + 1)]
    for idx in rng.permutation(len(pool)):
        mask = pool[int(idx)]
        depth = int(rng.integers(0, s + 2))
        if depth == 0:
            continue
        # the families were cross-dependent before, so a new rainbow matching
        # would have to use mask as the representative of some f_i, i < depth
        if any(_rainbow_exists([[g for g in members[j] if not g & mask]
                                for j in range(s + 1) if j != i])
               for i in range(depth)):
            continue
        for i in range(depth):
            members[i].append(mask)
    fams = [Family(m, l, tuple(ms)) for ms in members]
    perm = [int(v) + 1 for v in rng.permutation(m)]
    matching = [KSet.of(perm[j * l:(j + 1) * l]).mask for j in range(t)]
    return CoverScenario(fams, matching, q, x, s)


# ── averaging over random full partitions ───────────────────────────────────

@dataclass
class PartitionAverageReport:
    trials: int
    mean: float
    expected: Fraction
    std_error: float
    max_hits: int
    status: str  # "pass", "fail" or "inconclusive"
    implied_bound: Fraction  # s * C(n,k) / q = s * C(n-1, k-1)
    size_within_bound: bool


def partition_average_check(f: Family, s: int, q: int, trials: int, seed: int = 0,
                            min_trials: int = 30) -> PartitionAverageReport:
    """Sample uniform partitions of [qk] into q blocks and average |f ∩ partition|."""
    n, k = f.n, f.k
    if n != q * k:
        raise PreconditionError(f"need n = q*k, got n={n}, q={q}, k={k}")
    rng = np.random.default_rng(seed)
    present = f._maskset
    bits = [1 << i for i in range(n)]
    counts = np.empty(trials, dtype=np.int64)
    for r in range(trials):
        perm = rng.permutation(n)
        c = 0
        for b in range(q):
            mask = 0
            for e in perm[b * k:(b + 1) * k]:
                mask |= bits[e]
            c += mask in present
        counts[r] = c
    expected = Fraction(q * len(f), binom(n, k))
    mean = float(math.fsum(counts)) / trials if trials else 0.0
    var = float(np.var(counts, ddof=1)) if trials > 1 else 0.0
    se = math.sqrt(var / trials) if trials else math.inf
    max_hits = int(counts.max()) if trials else 0
    bound = Fraction(s * binom(n, k), q)
    assert bound == s * binom(n - 1, k - 1)
    if trials < min_trials:
        status = "inconclusive"
    else:
        close = abs(mean - float(expected)) <= 3 * se if se > 0 else mean == float(expected)
        status = "pass" if close and max_hits <= s else "fail"
    return PartitionAverageReport(trials, mean, expected, se, max_hits, status, bound,
                                  len(f) <= bound)


def exact_report(p: Params, mode: str = "full", **kw) -> dict:
    res = exact_m(p, mode, **kw)
    conj = conjectured_m(p)
    return {
        "params": {"n": p.n, "k": p.k, "s": p.s, "mode": mode},
        "optimum": res.optimum,
        "conjectured": conj,
        "agree": res.optimum == conj,
        "nodes": res.nodes_explored,
        "seconds": res.seconds,
    }
