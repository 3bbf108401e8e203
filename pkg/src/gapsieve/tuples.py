"""Admissible offset tuples and their residue structure.

An offset tuple is a set of distinct positive integers h_1 < ... < h_k inside
[1, span_bound].  For each prime p the tuple covers the residue classes
-h (mod p); the tuple is admissible when no prime is fully covered.  For
squarefree d the covered classes extend multiplicatively: n is covered mod d
iff d divides (n + h_1) * ... * (n + h_k), which is always decided per prime,
never by forming that product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

from .errors import NotSquarefreeError
from .primes import base_primes

# The 7-offset pattern used for the two-primes-in-a-window computations,
# stored shifted into [1, 22].
SEPTUPLE_OFFSETS = (2, 4, 8, 10, 14, 20, 22)
TWIN_OFFSETS = (1, 3)


@dataclass(frozen=True)
class OffsetTuple:
    """Strictly increasing distinct offsets within [1, span_bound]."""

    offsets: tuple[int, ...]
    span_bound: int = 0  # 0 means "use the largest offset"

    def __post_init__(self) -> None:
        if not self.offsets:
            raise ValueError("offset tuple must be nonempty")
        offs = tuple(int(h) for h in self.offsets)
        if len(set(offs)) != len(offs):
            raise ValueError(f"duplicate offsets in {offs}")
        offs = tuple(sorted(offs))
        if offs[0] < 1:
            raise ValueError(f"offsets must be >= 1, got {offs[0]}")
        span = self.span_bound if self.span_bound else offs[-1]
        if offs[-1] > span:
            raise ValueError(f"offset {offs[-1]} exceeds span bound {span}")
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "span_bound", span)

    @property
    def k(self) -> int:
        return len(self.offsets)

    @classmethod
    def parse(cls, text: str, span_bound: int = 0) -> "OffsetTuple":
        """Parse the comma-separated text form, e.g. "1,3"."""
        try:
            offs = tuple(int(part) for part in text.split(","))
        except ValueError as exc:
            raise ValueError(f"invalid tuple text {text!r}") from exc
        return cls(offs, span_bound)

    def text(self) -> str:
        return ",".join(str(h) for h in self.offsets)

    def __str__(self) -> str:
        return "{" + self.text() + "}"


def normalize_offsets(values: tuple[int, ...] | list[int]) -> tuple[tuple[int, ...], int]:
    """Shift raw pattern values so the smallest becomes 1.

    Returns (offsets, shift).  Everything downstream is shift-invariant, so
    patterns written with a 0 offset are accepted this way; the shift is
    recorded in run manifests.
    """
    if not values:
        raise ValueError("empty pattern")
    shift = 1 - min(values)
    return tuple(sorted(v + shift for v in values)), shift


def omega_residues(t: OffsetTuple, p: int) -> tuple[int, ...]:
    """Sorted distinct residues -h mod p covered by the tuple."""
    return tuple(sorted({(-h) % p for h in t.offsets}))


def omega_size(t: OffsetTuple, p: int) -> int:
    if p > t.span_bound:
        return t.k
    return len({(-h) % p for h in t.offsets})


@dataclass(frozen=True)
class OmegaProfile:
    """Per-prime covered-class counts up to a cutoff.

    The table stores every prime p <= span_bound explicitly; all larger
    primes up to (and beyond) the cutoff have exactly k covered classes, so
    they are represented by the constant rather than materialized.
    """

    tuple_: OffsetTuple
    cutoff: int
    table: dict[int, int] = field(default_factory=dict)

    def size(self, p: int) -> int:
        return self.table.get(p, self.tuple_.k)

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.table.items())


def omega_profile(t: OffsetTuple, cutoff: int) -> OmegaProfile:
    """Exact covered-class counts for all primes p <= cutoff."""
    if cutoff < t.span_bound:
        raise ValueError(
            f"cutoff {cutoff} below span bound {t.span_bound}: "
            "the non-generic primes would be silently truncated"
        )
    table = {int(p): omega_size(t, int(p)) for p in base_primes(min(cutoff, t.span_bound))}
    return OmegaProfile(t, cutoff, table)


def is_admissible(t: OffsetTuple) -> bool:
    """True iff no prime has all its residue classes covered.

    Only primes p <= k need checking: beyond that the covered count is at
    most k < p.
    """
    return first_obstruction(t) is None


def first_obstruction(t: OffsetTuple) -> int | None:
    """Smallest prime with every class covered, or None when admissible."""
    for p in base_primes(t.k):
        p = int(p)
        if omega_size(t, p) == p:
            return p
    return None


def _squarefree_prime_factors(d: int) -> list[int]:
    if d < 1:
        raise NotSquarefreeError(f"need d >= 1, got {d}")
    factors = []
    m = d
    for p in base_primes(math.isqrt(d)):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            m //= p
            if m % p == 0:
                raise NotSquarefreeError(f"{d} is divisible by {p}^2")
            factors.append(p)
    if m > 1:
        factors.append(m)
    return factors


def member_of_omega(n: int, d: int, t: OffsetTuple) -> bool:
    """True iff squarefree d divides (n+h_1)...(n+h_k), decided per prime."""
    for p in _squarefree_prime_factors(d):
        if all((n + h) % p != 0 for h in t.offsets):
            return False
    return True


class _Unchanged:
    """Marker: the extension offset already belongs to the tuple."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNCHANGED"


UNCHANGED = _Unchanged()


def extend(t: OffsetTuple, h: int) -> OffsetTuple | _Unchanged:
    """The (k+1)-tuple with h adjoined, or UNCHANGED when h is a member.

    The extension may be inadmissible; that is allowed and downstream code
    treats its vanishing density constant as an exact zero.
    """
    if not (1 <= h <= t.span_bound):
        raise ValueError(f"extension offset {h} outside [1, {t.span_bound}]")
    if h in t.offsets:
        return UNCHANGED
    return OffsetTuple(t.offsets + (h,), t.span_bound)


def extended_omega_size(t: OffsetTuple, h: int, p: int) -> int:
    """Covered-class count of the tuple extended by h, from the base tuple.

    Independent route used to cross-check the directly-extended tuple: the
    count grows by one exactly when -h mod p is not already covered.
    """
    if h in t.offsets:
        return omega_size(t, p)
    residues = {(-g) % p for g in t.offsets}
    grown = 0 if (-h) % p in residues else 1
    return len(residues) + grown


def unrank_combination(span_bound: int, k: int, index: int) -> tuple[int, ...]:
    """The index-th k-subset of [1, span_bound] in lexicographic order."""
    if not (0 <= index < math.comb(span_bound, k)):
        raise ValueError(f"index {index} outside [0, C({span_bound},{k}))")
    out = []
    c = 1
    for slot in range(k):
        while True:
            below = math.comb(span_bound - c, k - slot - 1)
            if index < below:
                break
            index -= below
            c += 1
        out.append(c)
        c += 1
    return tuple(out)


def enumerate_tuples(
    span_bound: int,
    k: int,
    admissible_only: bool = False,
    stride: int = 1,
    phase: int = 0,
) -> Iterator[OffsetTuple]:
    """All k-subsets of [1, span_bound] in lexicographic order.

    stride > 1 keeps every stride-th subset (offset by phase) *before* the
    admissibility filter, so a sample is a deterministic, unbiased slice of
    the full enumeration.  Sampled subsets are unranked directly; the cost
    scales with the sample, not the full binomial count.
    """
    if k > span_bound:
        raise ValueError(f"k={k} exceeds span bound {span_bound}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    phase %= stride
    if stride == 1:
        source = combinations(range(1, span_bound + 1), k)
    else:
        total = math.comb(span_bound, k)
        source = (unrank_combination(span_bound, k, i) for i in range(phase, total, stride))
    for offs in source:
        t = OffsetTuple(offs, span_bound)
        if admissible_only and not is_admissible(t):
            continue
        yield t


def tuple_count(span_bound: int, k: int) -> int:
    return math.comb(span_bound, k)
