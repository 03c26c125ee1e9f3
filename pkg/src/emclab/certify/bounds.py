"""Registry of upper bounds on m(n,k,s), the convex extension of a density
bound, the γ-search for minimum-degree thresholds and the limiting
densities of the two extremal constructions.

Everything here is exact rational arithmetic unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..combinatorics import binom, conjectured
from ..errors import PreconditionError
from ..family import Params

GAMMA_MAX = Fraction(5, 3)


# ── the elementary inequality for falling products ──────────────────────────

def falling_ratio(a, b, k1: int, k2: int) -> Fraction:
    a, b = Fraction(a), Fraction(b)
    num = Fraction(1)
    for i in range(1, k1 + 1):
        num *= a - i
    for i in range(1, k2 + 1):
        num *= b - i
    den = Fraction(1)
    for i in range(1, k1 + k2 + 1):
        den *= a + b - i
    return num / den


def bincoeff_inequality_check(a, b, k1: int, k2: int) -> bool:
    """Π(a-i)Π(b-i)/Π(a+b-i) <= a^k1 b^k2 / (a+b)^(k1+k2), exactly."""
    a, b = Fraction(a), Fraction(b)
    if a <= 0 or b <= 0 or k1 < 0 or k2 < 0:
        raise PreconditionError("need a, b > 0 and k1, k2 >= 0")
    if not (k1 < a and k2 < b):
        raise PreconditionError(f"need k1 < a and k2 < b, got a={a}, b={b}, k1={k1}, k2={k2}")
    return falling_ratio(a, b, k1, k2) <= a ** k1 * b ** k2 / (a + b) ** (k1 + k2)


# ── bound registry ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BoundRow:
    name: str
    gamma: Fraction | None
    value: Fraction | None  # None when not applicable
    applicable: bool
    asymptotic: bool  # only claimed for s beyond an unspecified threshold
    condition: str

    def as_dict(self) -> dict:
        return {"name": self.name, "gamma": None if self.gamma is None else str(self.gamma),
                "value": None if self.value is None else str(self.value),
                "value_float": None if self.value is None else float(self.value),
                "applicable": self.applicable, "asymptotic": self.asymptotic,
                "condition": self.condition}


@dataclass
class BoundReport:
    params: Params
    conjectured: int
    rows: list = field(default_factory=list)

    def applicable(self, rigorous_only: bool = False) -> list:
        return [r for r in self.rows if r.applicable and not (rigorous_only and r.asymptotic)]

    def minimum(self, rigorous_only: bool = False) -> BoundRow | None:
        rows = self.applicable(rigorous_only)
        return min(rows, key=lambda r: r.value) if rows else None

    def all_above_conjectured(self, rigorous_only: bool = False) -> bool:
        return all(r.value >= self.conjectured for r in self.applicable(rigorous_only))

    def as_rows(self) -> list[dict]:
        best = self.minimum()
        best_r = self.minimum(rigorous_only=True)
        out = []
        for r in self.rows:
            d = r.as_dict()
            d.update(n=self.params.n, k=self.params.k, s=self.params.s, conjectured=self.conjectured,
                     minimum=r is best, minimum_rigorous=r is best_r)
            out.append(d)
        return out


def frankl_bound(p: Params) -> int:
    return p.s * binom(p.n - 1, p.k - 1)


def han_bound(p: Params, gamma) -> Fraction:
    n, k, s = p.n, p.k, p.s
    g = Fraction(gamma)
    coef = ((2 - g) * k - 1) / (g * k - 1)
    return binom(n, k) - binom(n - s, k) + coef * s * binom(n - s - 1, k - 1)


def han_applies(p: Params, gamma) -> bool:
    g = Fraction(gamma)
    return 1 < g <= 2 - Fraction(1, p.k) and p.n >= g * p.k * (p.s + 1) + p.k - 1


def kneser_coefficient(gamma, k: int) -> Fraction:
    g = Fraction(gamma)
    return (g - 1) / 2 * Fraction(5 * k - 2) / (g * k - (g - 1))


def kneser_bound(p: Params, gamma) -> Fraction:
    return binom(p.n, p.k) - kneser_coefficient(gamma, p.k) * binom(p.n - p.s, p.k)


def kneser_applies(p: Params, gamma) -> bool:
    g = Fraction(gamma)
    return 1 < g <= GAMMA_MAX and p.n >= g * p.s * p.k - (g - 1) * p.s


def feige_bound(p: Params) -> Fraction:
    return Fraction(12, 13) * binom(p.n, p.k)


def feige_applies(p: Params) -> bool:
    # s = n/(k+δ) with δ >= 1/12, i.e. n >= (k + 1/12) s
    return p.s >= 1 and p.n >= (p.k + Fraction(1, 12)) * p.s


def universal_bounds(p: Params, gammas: Sequence = ()) -> BoundReport:
    conj = conjectured(p).value
    rep = BoundReport(p, conj)
    rep.rows.append(BoundRow("frankl", None, Fraction(frankl_bound(p)), True, False,
                             "all n >= k(s+1)"))
    for g in gammas:
        g = Fraction(g)
        ok = han_applies(p, g)
        rep.rows.append(BoundRow("han", g, han_bound(p, g) if ok else None, ok, False,
                                 "1 < γ <= 2-1/k, n >= γk(s+1)+k-1"))
        ok = kneser_applies(p, g)
        rep.rows.append(BoundRow("kneser", g, kneser_bound(p, g) if ok else None, ok, True,
                                 "1 < γ <= 5/3, n >= γsk-(γ-1)s, s large"))
    ok = feige_applies(p)
    rep.rows.append(BoundRow("feige", None, feige_bound(p) if ok else None, ok, True,
                             "n >= (k+1/12)s, s large, ε = 0"))
    return rep


def limit_coefficients(gamma, k: int) -> tuple[Fraction, Fraction]:
    """Coefficients a with bound ≈ C(n,k) - a C(n-s,k) as s → ∞, n = γks.

    Returns (han, kneser); the larger coefficient is the stronger bound.
    """
    g = Fraction(gamma)
    h = ((2 - g) * k - 1) / (g * k - 1)
    # s C(n-s-1,k-1) = C(n-s,k) ks/(n-s) → C(n-s,k) k/(γk-1)
    return 1 - h * k / (g * k - 1), kneser_coefficient(g, k)


def crossover_gamma(k: int | None = None, tol=Fraction(1, 10**12)) -> Fraction | None:
    """Largest γ in (1, 5/3] where the two limiting coefficients agree.

    Above it the Kneser-based bound is the stronger one. k=None gives the
    k → ∞ limit, exactly 4/3. Returns None when the Kneser-based bound is
    not stronger at γ = 5/3 (small k). Near γ = 1 both bounds are close to
    trivial and their order can flip again; that region is not searched.
    """
    if k is None:
        # (γ+2)(γ-1)/γ² = 5(γ-1)/(2γ)  ⇔  γ = 4/3
        return Fraction(4, 3)

    def f(g):
        h, kn = limit_coefficients(g, k)
        return kn - h

    hi = GAMMA_MAX
    if f(hi) <= 0:
        return None
    step = Fraction(1, 1000)
    lo = hi - step
    while f(lo) > 0:
        lo -= step
        if lo <= 1:
            return None
    while hi - lo > tol:
        mid = Fraction(round((lo + hi) / 2 * 2**60), 2**60)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# ── convex extension of a density bound ─────────────────────────────────────

def extend_bound(x, alpha, y, k: int) -> Fraction:
    x, alpha, y = Fraction(x), Fraction(alpha), Fraction(y)
    if not (0 < x <= y <= Fraction(1, k)):
        raise PreconditionError(f"need 0 < x <= y <= 1/k, got x={x}, y={y}, k={k}")
    if not (0 < alpha < 1):
        raise PreconditionError(f"need 0 < α < 1, got {alpha}")
    return alpha + (y - x) / (Fraction(1, k) - x) * (1 - alpha)


def extension_identity(gamma, k: int, density) -> bool:
    """Extending 1 - ρ from x = 3/(5k-2) to y = 1/(γk-γ+1) gives 1 - κ(γ,k) ρ."""
    g, rho = Fraction(gamma), Fraction(density)
    x = Fraction(3, 5 * k - 2)
    y = 1 / (g * k - (g - 1))
    return 1 - extend_bound(x, 1 - rho, y, k) == kneser_coefficient(g, k) * rho


# ── minimum-degree γ-search ─────────────────────────────────────────────────

EXACT_DIRAC_MAX_K = 256


@dataclass(frozen=True)
class DiracResult:
    k: int
    d: int
    gamma: Fraction
    value: Fraction  # κ(γ,k)(1-1/k)^{k-d}; a certified lower bound when not exact
    degree_margin: Fraction  # d - (γ-1)/γ (k-1), needs > 0
    exact: bool = True

    @property
    def value_margin(self) -> Fraction:
        return self.value - Fraction(1, 2)

    def as_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "gamma": str(self.gamma), "value": float(self.value),
                "value_margin": float(self.value_margin), "degree_margin": float(self.degree_margin),
                "exact": self.exact}


def dirac_value(gamma, k: int, d: int) -> Fraction:
    return kneser_coefficient(gamma, k) * (1 - Fraction(1, k)) ** (k - d)


def _value_lower(k: int, d: int):
    """γ -> a lower bound on the value; exact for small k, ball arithmetic otherwise."""
    if k <= EXACT_DIRAC_MAX_K:
        power = (1 - Fraction(1, k)) ** (k - d)
        return (lambda g: kneser_coefficient(g, k) * power), True
    from flint import arb

    from .balls import lower, precision, to_arb
    with precision(None):
        power = ((k - d) * (arb(k - 1) / k).log()).exp()

    def f(g):
        with precision(None):
            return lower(to_arb(kneser_coefficient(g, k)) * power)
    return f, False


def dirac_gamma_search(k: int, d: int, backoff_bits: int = 200) -> DiracResult | None:
    """A γ in (1, 5/3] with d > (γ-1)(k-1)/γ and value >= 1/2, or None.

    The value increases with γ, so the best candidate is the supremum of the
    degree constraint (capped at 5/3); when that constraint binds, γ is
    backed off below it by dyadic steps. For k beyond EXACT_DIRAC_MAX_K the
    value is a certified lower bound from ball arithmetic.
    """
    if not (1 <= d <= k - 1):
        raise PreconditionError(f"need 1 <= d <= k-1, got k={k}, d={d}")
    half = Fraction(1, 2)
    value, exact = _value_lower(k, d)

    def result(g):
        return DiracResult(k, d, g, value(g), d - (g - 1) / g * (k - 1), exact)

    if d == k - 1:
        sup = None  # (γ-1)/γ (k-1) < k-1 for every γ
    else:
        sup = Fraction(k - 1, k - 1 - d)  # d > (γ-1)(k-1)/γ  ⇔  γ < sup
    if sup is None or sup > GAMMA_MAX:
        r = result(GAMMA_MAX)
        return r if r.value >= half else None
    if sup <= 1:
        return None
    for j in range(1, backoff_bits + 1):
        g = sup - Fraction(sup - 1, 2 ** j)
        r = result(g)
        if r.value >= half and r.degree_margin > 0:
            return r
    return None


def dirac_grid(k_values: Sequence[int]) -> list:
    """Search at d = ceil(3k/8) for each k (k >= 2)."""
    out = []
    for k in k_values:
        d = max(1, -(-3 * k // 8))
        if d > k - 1:
            continue
        out.append((k, d, dirac_gamma_search(k, d)))
    return out


# ── limiting densities ──────────────────────────────────────────────────────

def asymptotic_densities(k: int, x) -> tuple[Fraction, Fraction]:
    """(1-(1-x)^k, (kx)^k): the limiting densities of the two constructions."""
    x = Fraction(x)
    if not (0 < x <= Fraction(1, k)):
        raise PreconditionError(f"need 0 < x <= 1/k, got {x}")
    return 1 - (1 - x) ** k, (k * x) ** k


def samuels_terms(xs: Sequence) -> list[Fraction]:
    xs = [Fraction(v) for v in xs]
    if any(v < 0 for v in xs) or sum(xs) >= 1:
        raise PreconditionError("need non-negative means with sum below 1")
    k = len(xs)
    out = []
    for t in range(k):
        head = sum(xs[:t], Fraction(0))
        prod = Fraction(1)
        for v in xs[t:]:
            prod *= 1 - v / (1 - head)
        out.append(1 - prod)
    return out


def samuels_rhs(xs: Sequence) -> Fraction:
    return max(samuels_terms(xs))


def samuels_argmax(xs: Sequence) -> int:
    terms = samuels_terms(xs)
    best = max(terms)
    return terms.index(best)


def density_crossover(k: int = 3, tol=Fraction(1, 10**12)) -> tuple[Fraction, Fraction]:
    """Bracket [lo, hi] of width <= tol around x with 1-(1-x)^k = (kx)^k in (0, 1/k)."""
    def f(x):
        a, b = asymptotic_densities(k, x)
        return a - b

    lo, hi = Fraction(1, 10 * k), Fraction(1, k)
    if not f(lo) > 0 > f(hi):
        raise PreconditionError("no sign change for the density crossover")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def density_crossover_float(k: int = 3) -> float:
    lo, hi = density_crossover(k)
    return float((lo + hi) / 2)
