"""Bitset-backed k-sets and uniform set families over a ground set [n].

Element ``x`` of ``[n] = {1, ..., n}`` is stored as bit ``x - 1`` of a Python
int, so ground sets of any width are supported; the searches only ever touch
the raw masks and wrap them in :class:`KSet` at the API boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import PreconditionError


# ── raw mask helpers ─────────────────────────────────────────────────────────

def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for x in elements:
        if x < 1:
            raise PreconditionError(f"elements are 1-indexed, got {x}")
        m |= 1 << (x - 1)
    return m


def elements_of(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def lex_key(mask: int) -> tuple[int, ...]:
    return elements_of(mask)


def all_kset_masks(n: int, k: int) -> list[int]:
    """Every k-subset of [n] as a mask, in lexicographic order."""
    return [mask_of(c) for c in itertools.combinations(range(1, n + 1), k)]


# ── domain types ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, slots=True)
class KSet:
    mask: int
    cardinality: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.mask < 0:
            raise PreconditionError("negative mask")
        object.__setattr__(self, "cardinality", self.mask.bit_count())

    @classmethod
    def of(cls, elements: Iterable[int]) -> KSet:
        return cls(mask_of(elements))

    @property
    def elements(self) -> tuple[int, ...]:
        return elements_of(self.mask)

    @property
    def max_element(self) -> int:
        return self.mask.bit_length()

    def __contains__(self, x: int) -> bool:
        return x >= 1 and bool(self.mask >> (x - 1) & 1)

    def __len__(self) -> int:
        return self.cardinality

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def isdisjoint(self, other: KSet) -> bool:
        return not self.mask & other.mask

    def __repr__(self) -> str:
        return "{" + ",".join(map(str, self.elements)) + "}"


@dataclass(frozen=True, slots=True)
class Params:
    n: int
    k: int
    s: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < self.k:
            raise PreconditionError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.s < 0:
            raise PreconditionError(f"need s >= 0, got s={self.s}")


@dataclass(frozen=True)
class Family:
    """A deduplicated k-uniform family on [n], kept in lexicographic order."""

    n: int
    k: int
    masks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 0 or self.k < 0:
            raise PreconditionError("n and k must be non-negative")
        limit = 1 << self.n
        for m in self.masks:
            if m >= limit or m < 0:
                raise PreconditionError(f"set {elements_of(m)} is not inside [{self.n}]")
            if m.bit_count() != self.k:
                raise PreconditionError(f"set {elements_of(m)} does not have size {self.k}")
        canon = tuple(sorted(set(self.masks), key=lex_key))
        object.__setattr__(self, "masks", canon)

    @classmethod
    def from_sets(cls, n: int, k: int, sets: Iterable[Iterable[int]]) -> Family:
        return cls(n, k, tuple(mask_of(s) for s in sets))

    @property
    def sets(self) -> list[KSet]:
        return [KSet(m) for m in self.masks]

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self) -> Iterator[KSet]:
        return (KSet(m) for m in self.masks)

    def __contains__(self, item: KSet | int) -> bool:
        m = item.mask if isinstance(item, KSet) else item
        return m in self._maskset

    @property
    def _maskset(self) -> frozenset[int]:
        cached = self.__dict__.get("_maskset_cache")
        if cached is None:
            cached = frozenset(self.masks)
            object.__setattr__(self, "_maskset_cache", cached)
        return cached

    def with_masks(self, masks: Iterable[int]) -> Family:
        return Family(self.n, self.k, tuple(masks))

    def as_tuples(self) -> list[tuple[int, ...]]:
        return [elements_of(m) for m in self.masks]

    def __repr__(self) -> str:
        return f"Family(n={self.n}, k={self.k}, size={len(self)})"


# ── standard constructions ───────────────────────────────────────────────────

def full_layer(n: int, k: int) -> Family:
    return Family(n, k, tuple(all_kset_masks(n, k)))


def family_A(n: int, k: int, s: int) -> Family:
    """All k-sets of [n] meeting the prefix [s]."""
    prefix = (1 << s) - 1
    return Family(n, k, tuple(m for m in all_kset_masks(n, k) if m & prefix))


def family_A0(k: int, s: int, n: int | None = None) -> Family:
    """All k-subsets of [k(s+1)-1], viewed inside [n] (default n = k(s+1)-1)."""
    top = k * (s + 1) - 1
    ground = top if n is None else n
    if ground < top:
        raise PreconditionError(f"ground set [{ground}] cannot hold [{top}]")
    return Family(ground, k, tuple(all_kset_masks(top, k)))


def family_A2(n: int, k: int, s: int) -> Family:
    """k-sets meeting [2s+1] in at least two elements (high s-diversity)."""
    prefix = (1 << (2 * s + 1)) - 1
    return Family(n, k, tuple(m for m in all_kset_masks(n, k) if (m & prefix).bit_count() >= 2))


def construct(name: str, n: int, k: int, s: int) -> Family:
    """Build a named family; used by the CLI."""
    name = name.upper()
    if name == "A":
        return family_A(n, k, s)
    if name == "A0":
        return family_A0(k, s, n)
    if name == "A2":
        return family_A2(n, k, s)
    if name in ("FULL", "LAYER"):
        return full_layer(n, k)
    raise PreconditionError(f"unknown construction {name!r}")


# ── text serialization ───────────────────────────────────────────────────────
# Header line "n k count", then one set per line as increasing integers.

def dumps_family(f: Family) -> str:
    lines = [f"{f.n} {f.k} {len(f)}"]
    lines.extend(" ".join(map(str, elements_of(m))) for m in f.masks)
    return "\n".join(lines) + "\n"


def loads_family(text: str) -> Family:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    if not rows:
        raise PreconditionError("empty family file")
    try:
        n, k, count = (int(x) for x in rows[0].split())
    except ValueError as exc:
        raise PreconditionError(f"bad header line {rows[0]!r}") from exc
    body = rows[1:]
    if len(body) != count:
        raise PreconditionError(f"header announces {count} sets, found {len(body)}")
    sets = []
    for r in body:
        elems = [int(x) for x in r.split()]
        if any(a >= b for a, b in zip(elems, elems[1:])):
            raise PreconditionError(f"set line {r!r} is not strictly increasing")
        sets.append(elems)
    f = Family.from_sets(n, k, sets)
    if len(f) != count:
        raise PreconditionError("family file contains duplicate sets")
    return f


def write_family(f: Family, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps_family(f))
    return path


def read_family(path: str | Path) -> Family:
    return loads_family(Path(path).read_text())
