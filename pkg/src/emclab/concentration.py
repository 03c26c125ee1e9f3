"""Random t-matchings of l-sets and concentration of η = |g ∩ matching|.

Monte-Carlo checks compare empirical frequencies against the exact bounds
with a slack of four binomial standard errors. Trial counts are split into
fixed-size chunks whose seeds are spawned from the run seed, so results do
not depend on the number of worker threads.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import binom
from .errors import PreconditionError, ScaleLimitError
from .family import Family, elements_of, mask_of
from .kneser import induced_edges, kneser_params

CHUNK = 50_000
MIN_TRIALS = 1_000
LOOKUP_LIMIT = 50_000_000
SLACK_SE = 4


@dataclass(frozen=True)
class MatchingSample:
    blocks: tuple[int, ...]  # masks, in draw order
    seed: int | None

    def block_sets(self) -> list[tuple[int, ...]]:
        return [elements_of(b) for b in self.blocks]


def sample_matching(m: int, l: int, t: int, seed: int | None = None,
                    rng: np.random.Generator | None = None) -> MatchingSample:
    """Uniform ordered t-matching: each block is uniform among l-subsets of what is left."""
    if l < 1 or t < 0 or m < t * l:
        raise PreconditionError(f"need m >= t*l with l >= 1, got m={m}, l={l}, t={t}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    perm = rng.permutation(m) + 1
    blocks = tuple(mask_of(perm[j * l:(j + 1) * l].tolist()) for j in range(t))
    return MatchingSample(blocks, seed)


def _alpha(g: Family) -> Fraction:
    return Fraction(len(g), binom(g.n, g.k))


def _lookup_table(g: Family) -> np.ndarray:
    m, l = g.n, g.k
    size = m ** l
    if size > LOOKUP_LIMIT:
        raise ScaleLimitError(f"membership table of size m^l = {size} is too large")
    table = np.zeros(size, dtype=bool)
    weights = m ** np.arange(l)
    for mask in g.masks:
        els = np.array(elements_of(mask)) - 1
        table[int(els @ weights)] = True
    return table


def _eta_chunk(g: Family, t: int, count: int, seed: np.random.SeedSequence,
               table: np.ndarray | None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m, l = g.n, g.k
    if l == 1:
        good = len(g)
        return rng.hypergeometric(good, m - good, t, size=count).astype(np.int64) if t else np.zeros(count, np.int64)
    base = np.broadcast_to(np.arange(m, dtype=np.int32), (count, m))
    perm = rng.permuted(base, axis=1)[:, :t * l].reshape(count, t, l)
    perm.sort(axis=2)
    codes = perm.astype(np.int64) @ (m ** np.arange(l, dtype=np.int64))
    return table[codes].sum(axis=1).astype(np.int64)


def sample_eta(g: Family, t: int, trials: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """η for ``trials`` independent uniform t-matchings of l-sets on [n]."""
    if g.k < 1 or g.n < t * g.k:
        raise PreconditionError(f"need m >= t*l, got m={g.n}, l={g.k}, t={t}")
    if trials <= 0:
        return np.zeros(0, dtype=np.int64)
    if len(g) == 0:
        return np.zeros(trials, dtype=np.int64)
    table = _lookup_table(g) if g.k > 1 else None
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda job: _eta_chunk(g, t, job[0], job[1], table), jobs))
    else:
        parts = [_eta_chunk(g, t, n_, s_, table) for n_, s_ in jobs]
    return np.concatenate(parts)


@dataclass
class ThresholdRow:
    threshold: float
    empirical: float
    bound: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + self.slack

    def as_dict(self) -> dict:
        return {"threshold": self.threshold, "empirical": self.empirical, "bound": self.bound,
                "slack": self.slack, "pass": self.passed}


def binomial_se(p: float, n: int) -> float:
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1 - p) / n) if n else math.inf


@dataclass
class ConcentrationStats:
    alpha: Fraction
    t: int
    trials: int
    empirical_mean: float
    empirical_var: float
    mean_se: float
    var_se: float
    tail_counts: dict[float, float] = field(default_factory=dict)
    chebyshev: list[ThresholdRow] = field(default_factory=list)
    status: str = "pass"

    @property
    def expected_mean(self) -> float:
        return float(self.alpha * self.t)

    @property
    def variance_bound(self) -> float:
        return float(2 * self.t * self.alpha * (1 - self.alpha))

    @property
    def mean_ok(self) -> bool:
        if self.mean_se == 0:
            return self.empirical_mean == self.expected_mean
        return abs(self.empirical_mean - self.expected_mean) <= SLACK_SE * self.mean_se

    @property
    def variance_ok(self) -> bool:
        return self.empirical_var <= self.variance_bound + SLACK_SE * self.var_se


def _moments(eta: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, unbiased variance and their standard errors from exact integer sums."""
    n = len(eta)
    s1 = int(eta.sum())
    s2 = int((eta * eta).sum())
    mean = Fraction(s1, n)
    var = (Fraction(s2) - n * mean * mean) / (n - 1) if n > 1 else Fraction(0)
    centred = eta - float(mean)
    m4 = math.fsum((centred ** 4).tolist()) / n
    mean_se = math.sqrt(float(var) / n)
    var_se = math.sqrt(max(m4 - float(var) ** 2, 0.0) / n)
    return float(mean), float(var), mean_se, var_se


def eta_stats(g: Family, t: int, trials: int, seed: int = 0,
              betas: Sequence[float] = (0.1, 0.2, 0.3, 0.5), threads: int = 1,
              min_trials: int = MIN_TRIALS) -> ConcentrationStats:
    eta = sample_eta(g, t, trials, seed, threads)
    alpha = _alpha(g)
    mean, var, mse, vse = _moments(eta)
    st = ConcentrationStats(alpha, t, trials, mean, var, mse, vse)
    dev = np.abs(eta - float(alpha * t))
    for b in betas:
        freq = float(np.count_nonzero(dev >= b * t - 1e-12)) / trials
        bound = float(2 * alpha * (1 - alpha)) / (b * b * t)
        st.tail_counts[b] = freq
        st.chebyshev.append(ThresholdRow(b, freq, bound, SLACK_SE * binomial_se(bound, trials)))
    if trials < min_trials:
        st.status = "inconclusive"
    elif st.mean_ok and st.variance_ok and all(r.passed for r in st.chebyshev):
        st.status = "pass"
    else:
        st.status = "fail"
    return st


@dataclass(frozen=True)
class CovarianceReport:
    alpha: Fraction
    joint: Fraction  # Pr(A_i ∩ A_j)
    covariance: Fraction
    bound: Fraction  # α(1-α)/(t-1)
    spectral_bound: Fraction  # λ α(1-α)/D

    @property
    def holds(self) -> bool:
        return abs(self.covariance) <= self.bound and abs(self.covariance) <= self.spectral_bound


def covariance_check(g: Family, t: int) -> CovarianceReport:
    """Exact covariance of two block indicators of a random t-matching."""
    m, l = g.n, g.k
    if t < 2 or m < t * l:
        raise PreconditionError(f"need t >= 2 and m >= t*l, got m={m}, l={l}, t={t}")
    kp = kneser_params(m, l)
    alpha = _alpha(g)
    joint = Fraction(2 * induced_edges(g), kp.D * kp.M)
    cov = joint - alpha * alpha
    return CovarianceReport(alpha, joint, cov, alpha * (1 - alpha) / (t - 1),
                            Fraction(kp.lam) * alpha * (1 - alpha) / kp.D)


def azuma_tail_check(g: Family, t: int, trials: int, betas: Iterable[float] = (1, 2, 3),
                     seed: int = 0, threads: int = 1, eta: np.ndarray | None = None) -> list[ThresholdRow]:
    """Empirical Pr[|η - αt| >= 2β√t] against 2exp(-β²/2)."""
    if eta is None:
        eta = sample_eta(g, t, trials, seed, threads)
    trials = len(eta)
    dev = np.abs(eta - float(_alpha(g) * t))
    rows = []
    for b in betas:
        freq = float(np.count_nonzero(dev >= 2 * b * math.sqrt(t) - 1e-12)) / trials
        bound = 2 * math.exp(-b * b / 2)
        rows.append(ThresholdRow(float(b), freq, bound, SLACK_SE * binomial_se(bound, trials)))
    return rows


# ── exact exposure martingale ───────────────────────────────────────────────

MARTINGALE_MAX_SEQUENCES = 2_000_000


def ordered_matchings(m: int, l: int, t: int) -> Iterable[tuple[int, ...]]:
    """Every ordered sequence of t pairwise disjoint l-subsets of [m], as masks."""
    subsets = [mask_of(c) for c in itertools.combinations(range(1, m + 1), l)]

    def rec(prefix: list[int], used: int):
        if len(prefix) == t:
            yield tuple(prefix)
            return
        for s in subsets:
            if not s & used:
                prefix.append(s)
                yield from rec(prefix, used | s)
                prefix.pop()

    yield from rec([], 0)


def count_ordered_matchings(m: int, l: int, t: int) -> int:
    total = 1
    free = m
    for _ in range(t):
        total *= binom(free, l)
        free -= l
    return total


@dataclass
class MartingaleReport:
    sequences: int
    x0: Fraction
    expected: Fraction
    max_step_indicator: Fraction  # filtration by η_1..η_i
    max_step_blocks: Fraction  # filtration by B_1..B_i
    max_step_refined: Fraction  # |E[η | η_i, B_<i] - E[η | B_<i]|
    ends_at_eta: bool
    paths: dict[tuple[int, ...], list[Fraction]] = field(default_factory=dict)

    @property
    def lipschitz_ok(self) -> bool:
        return (self.x0 == self.expected and self.ends_at_eta
                and max(self.max_step_indicator, self.max_step_blocks, self.max_step_refined) <= 2)


def exposure_martingale(g: Family, t: int, keep_paths: bool = True) -> MartingaleReport:
    """Exact Doob martingales of η by exhaustive enumeration of all t-matchings.

    X_i = E[η | η_1, ..., η_i] is returned per indicator trajectory; the
    block-exposure martingale and the refined one-step comparison are
    checked along the way.
    """
    m, l = g.n, g.k
    if m < t * l:
        raise PreconditionError(f"need m >= t*l, got m={m}, l={l}, t={t}")
    total = count_ordered_matchings(m, l, t)
    if total > MARTINGALE_MAX_SEQUENCES:
        raise ScaleLimitError(f"{total} ordered matchings exceed the enumeration limit")
    present = g._maskset
    ind_sum: dict[tuple[int, ...], list[int]] = {}
    blk_sum: dict[tuple[int, ...], list[int]] = {}
    refined: dict[tuple[tuple[int, ...], int], list[int]] = {}
    for seq in ordered_matchings(m, l, t):
        flags = tuple(int(b in present) for b in seq)
        eta = sum(flags)
        for i in range(t + 1):
            acc = ind_sum.setdefault(flags[:i], [0, 0])
            acc[0] += eta
            acc[1] += 1
            acc = blk_sum.setdefault(seq[:i], [0, 0])
            acc[0] += eta
            acc[1] += 1
            if i < t:
                acc = refined.setdefault((seq[:i], flags[i]), [0, 0])
                acc[0] += eta
                acc[1] += 1

    def cond(table, key) -> Fraction:
        s_, c_ = table[key]
        return Fraction(s_, c_)

    expected = _alpha(g) * t
    x0 = cond(ind_sum, ())
    step_ind = Fraction(0)
    paths: dict[tuple[int, ...], list[Fraction]] = {}
    ends = True
    for key in ind_sum:
        if len(key) == t:
            xs = [cond(ind_sum, key[:i]) for i in range(t + 1)]
            ends &= xs[-1] == sum(key)
            for a, b in zip(xs, xs[1:]):
                step_ind = max(step_ind, abs(b - a))
            if keep_paths:
                paths[key] = xs
    step_blk = Fraction(0)
    for key in blk_sum:
        if key:
            step_blk = max(step_blk, abs(cond(blk_sum, key) - cond(blk_sum, key[:-1])))
    step_ref = Fraction(0)
    for (prefix, flag) in refined:
        step_ref = max(step_ref, abs(cond(refined, (prefix, flag)) - cond(blk_sum, prefix)))
    return MartingaleReport(total, x0, expected, step_ind, step_blk, step_ref, ends, paths)


# ── stopping-time ratio bound ───────────────────────────────────────────────

@dataclass
class StoppingRatioReport:
    C: float
    t: int
    alpha: Fraction
    trials: int
    lhs: float  # Pr[η >= 4Ct]
    window: float  # Pr[|η - 2Ct| <= Ct]
    rhs: float  # 2 exp(-C²t/2) * window
    slack: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def as_row(self) -> ThresholdRow:
        return ThresholdRow(self.C, self.lhs, self.rhs, self.slack)


def stopping_ratio_check(g: Family, t: int, C: float, trials: int, seed: int = 0,
                         threads: int = 1) -> StoppingRatioReport:
    alpha = _alpha(g)
    if not (0 < C <= 0.5):
        raise PreconditionError(f"need 0 < C <= 1/2, got C={C}")
    if Fraction(C) < alpha:
        raise PreconditionError(f"need C >= alpha = {float(alpha):.6g}, got C={C}")
    if C * C * t < 16:
        raise PreconditionError(f"need C^2 t >= 16, got {C * C * t}")
    eta = sample_eta(g, t, trials, seed, threads)
    lhs = float(np.count_nonzero(eta >= 4 * C * t)) / trials
    window = float(np.count_nonzero(np.abs(eta - 2 * C * t) <= C * t)) / trials
    factor = 2 * math.exp(-C * C * t / 2)
    slack = SLACK_SE * math.hypot(binomial_se(lhs, trials), factor * binomial_se(window, trials))
    return StoppingRatioReport(C, t, alpha, trials, lhs, window, factor * window, slack)
