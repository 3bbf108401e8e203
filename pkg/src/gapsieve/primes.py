"""Segmented prime generation, the log-weighted prime indicator, and
progression-restricted prime sums.

Primality over a window is produced by a segmented sieve of Eratosthenes with
numpy strided marking.  All log-weight accumulations go through math.fsum
(exactly rounded, hence order-independent and bit-stable) unless a caller
explicitly asks for the streaming bucket pass in the distribution-level probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoprimalityError, SieveRangeError

# Flags per internal segment; power of two, fixed once here so partitions and
# reductions are identical no matter how many workers run.
SEGMENT_FLAGS = 1 << 20

# Largest hi accepted by the sieve (comfortably above 2e9).
SUPPORTED_SIEVE_BOUND = 1 << 34

# Largest window materialized as one flag array (memory guard); iterate
# segments for anything bigger.
MAX_MATERIALIZED_FLAGS = 1 << 28

_BASE_FLAGS_CACHE: np.ndarray = np.zeros(2, dtype=bool)


def _base_flags(limit: int) -> np.ndarray:
    """Primality flags for [0, limit], grown geometrically and cached."""
    global _BASE_FLAGS_CACHE
    if limit < len(_BASE_FLAGS_CACHE):
        return _BASE_FLAGS_CACHE
    size = max(limit + 1, 2 * len(_BASE_FLAGS_CACHE), 1 << 10)
    flags = np.ones(size, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(size - 1) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    _BASE_FLAGS_CACHE = flags
    return flags


def base_primes(limit: int) -> np.ndarray:
    """Sorted primes <= limit as int64."""
    flags = _base_flags(limit)
    return np.flatnonzero(flags[: limit + 1]).astype(np.int64)


@dataclass(frozen=True)
class PrimeSegment:
    """Immutable primality flags for the window [lo, hi).

    flags[i] is True exactly when lo + i is prime.
    """

    lo: int
    hi: int
    flags: np.ndarray

    def __post_init__(self) -> None:
        if not (2 <= self.lo < self.hi):
            raise SieveRangeError(f"need 2 <= lo < hi, got [{self.lo}, {self.hi})")
        if len(self.flags) != self.hi - self.lo:
            raise SieveRangeError("flag array length does not match range")
        self.flags.setflags(write=False)

    def __len__(self) -> int:
        return self.hi - self.lo

    def primes(self) -> np.ndarray:
        return self.lo + np.flatnonzero(self.flags)

    def count(self) -> int:
        return int(np.count_nonzero(self.flags))

    def is_prime(self, n: int) -> bool:
        if not (self.lo <= n < self.hi):
            raise SieveRangeError(f"{n} outside segment [{self.lo}, {self.hi})")
        return bool(self.flags[n - self.lo])


def _check_range(lo: int, hi: int) -> None:
    if not (2 <= lo < hi):
        raise SieveRangeError(f"need 2 <= lo < hi, got [{lo}, {hi})")
    if hi > SUPPORTED_SIEVE_BOUND:
        raise SieveRangeError(f"hi={hi} exceeds supported sieve bound {SUPPORTED_SIEVE_BOUND}")


def sieve_segment(lo: int, hi: int) -> PrimeSegment:
    """Exact primality flags for [lo, hi) by segmented Eratosthenes."""
    _check_range(lo, hi)
    if hi - lo > MAX_MATERIALIZED_FLAGS:
        raise SieveRangeError(
            f"window of {hi - lo} flags exceeds materialization cap "
            f"{MAX_MATERIALIZED_FLAGS}; iterate segments instead"
        )
    flags = np.ones(hi - lo, dtype=bool)
    root = math.isqrt(hi - 1)
    for p in base_primes(root):
        p = int(p)
        # start at p*p so base primes inside the window stay marked prime
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start < hi:
            flags[start - lo :: p] = False
    return PrimeSegment(lo, hi, flags)


def iter_prime_segments(lo: int, hi: int, flags_per_segment: int = SEGMENT_FLAGS):
    """Yield consecutive PrimeSegments covering [lo, hi)."""
    _check_range(lo, hi)
    s = lo
    while s < hi:
        e = min(s + flags_per_segment, hi)
        yield sieve_segment(s, e)
        s = e


def prime_flags(lo: int, hi: int) -> np.ndarray:
    """Primality flags for [lo, hi) as one array (windows up to the cap)."""
    _check_range(lo, hi)
    if hi - lo > MAX_MATERIALIZED_FLAGS:
        raise SieveRangeError(f"window of {hi - lo} flags exceeds materialization cap")
    return np.concatenate([seg.flags for seg in iter_prime_segments(lo, hi)])


def primes_in(lo: int, hi: int) -> np.ndarray:
    """Sorted primes in [lo, hi) as int64."""
    return lo + np.flatnonzero(prime_flags(lo, hi))


def is_prime(n: int) -> bool:
    """Trial division against cached base primes; exact for n within bound."""
    if n < 2:
        return False
    if n > SUPPORTED_SIEVE_BOUND:
        raise SieveRangeError(f"{n} exceeds supported bound {SUPPORTED_SIEVE_BOUND}")
    root = math.isqrt(n)
    for p in base_primes(root):
        if n % int(p) == 0:
            return False
    return True


def varpi(n: int) -> float:
    """log n when n is prime, else 0 (natural log)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return math.log(n) if is_prime(n) else 0.0


@dataclass(frozen=True)
class ThetaStarQuery:
    """Dyadic progression query: primes p in (y, 2y] with p = a (mod q).

    a is stored reduced mod q; q = 1 is the unconditional total (a collapses
    to 0).  Non-coprime (a, q) is rejected because the progression then holds
    at most one prime and the distribution hypothesis quantifies only over
    coprime classes.
    """

    y: int
    a: int
    q: int

    def __post_init__(self) -> None:
        if self.y < 1:
            raise ValueError(f"need y >= 1, got {self.y}")
        if self.q < 1:
            raise ValueError(f"need q >= 1, got {self.q}")
        object.__setattr__(self, "a", self.a % self.q)
        if math.gcd(self.a, self.q) != 1:
            raise CoprimalityError(f"gcd(a, q) = {math.gcd(self.a, self.q)} != 1 for a={self.a}, q={self.q}")


def theta_star(query: ThetaStarQuery) -> float:
    """Sum of log p over primes p in (y, 2y] with p = a (mod q).

    Ascending primes, exactly rounded accumulation.
    """
    lo, hi = query.y + 1, 2 * query.y + 1
    if hi <= 2:
        return 0.0
    lo = max(lo, 2)
    ps = primes_in(lo, hi)
    if query.q > 1:
        ps = ps[ps % query.q == query.a]
    return math.fsum(np.log(ps.astype(np.float64)))


def chebyshev_theta(x: int) -> float:
    """Sum of log p over primes p <= x."""
    if x < 2:
        return 0.0
    parts = [
        math.fsum(np.log(seg.primes().astype(np.float64)))
        for seg in iter_prime_segments(2, x + 1)
    ]
    return math.fsum(parts)


def min_gap_in(lo: int, hi: int) -> tuple[int, int]:
    """Smallest gap between consecutive primes inside [lo, hi], inclusive.

    Returns (gap, p) where p is the smaller prime of the first pair attaining
    the minimum.  Raises when the interval holds fewer than two primes.
    """
    ps = primes_in(max(lo, 2), hi + 1)
    if len(ps) < 2:
        raise SieveRangeError(f"fewer than two primes in [{lo}, {hi}]")
    gaps = np.diff(ps)
    i = int(np.argmin(gaps))  # first occurrence = smallest witness
    return int(gaps[i]), int(ps[i])
