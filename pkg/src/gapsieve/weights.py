"""Truncated Mobius-weighted divisor sums over blocks of n.

The per-divisor weight is mu(d) * (log(R/d))^a / a! for squarefree d <= R and
0 beyond R.  The per-n sum runs over squarefree d <= R dividing
(n+h_1)...(n+h_k), and is computed two independent ways:

  * lambda_block: enumerate every squarefree modulus d <= R once with its
    covered residue classes (CRT-combined per prime), walk moduli in
    ascending-d order, and Kahan-accumulate the weight into all hit positions
    of the block with vectorized strided updates.  Each n therefore receives
    exactly its divisors, in ascending-d order, compensated -- so block
    values are bit-identical however the surrounding range is partitioned.

  * lambda_bruteforce: factor each n+h_i by trial division, take the union
    prime set (<= R), enumerate all squarefree products <= R directly, and
    sum the weights in the same ascending-d compensated order.

Both routes share the single weight-evaluation helper, so any disagreement
isolates the divisor-finding logic rather than float noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, NotSquarefreeError, RegimeError
from .primes import base_primes
from .tuples import OffsetTuple, omega_residues

# largest truncation level a divisor table will be built for
R_BUDGET = 200_000
# largest block materialized at once
BLOCK_BUDGET = 1 << 24
# trial-division factoring cap for the oracle
FACTORING_BUDGET = 1 << 44


@dataclass(frozen=True)
class WeightParams:
    """Truncation level R and log-power a (= k + l in every downstream use)."""

    R: float
    a: int

    def __post_init__(self) -> None:
        if self.R < 1:
            raise ValueError(f"need R >= 1, got {self.R}")
        if self.a < 1:
            raise ValueError(f"need a >= 1, got {self.a}; a = 0 has no use here")


def _weight_value(mu: int, d: int, R: float, a: int) -> float:
    # shared by both routes: identical floats by construction
    return mu * math.log(R / d) ** a / math.factorial(a)


def lambda_weight(d: int, params: WeightParams) -> float:
    """mu(d) (log R/d)^a / a! for squarefree d <= R, else 0."""
    factors = _trial_factor_squarefree(d)
    if d > params.R:
        return 0.0
    return _weight_value(-1 if len(factors) % 2 else 1, d, params.R, params.a)


def _trial_factor_squarefree(d: int) -> list[int]:
    """Prime factors of d, raising unless d is squarefree."""
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


def _crt_merge(d: int, residues: tuple[int, ...], p: int, p_residues: tuple[int, ...]) -> tuple[int, ...]:
    """Residues mod d*p hitting `residues` mod d and `p_residues` mod p."""
    inv = pow(d, -1, p)
    out = []
    for r in residues:
        for s in p_residues:
            t = ((s - r) * inv) % p
            out.append(r + d * t)
    out.sort()
    return tuple(out)


@dataclass(frozen=True)
class DivisorEntry:
    d: int
    mu: int
    residues: tuple[int, ...]


def divisor_table(t: OffsetTuple, R: float) -> list[DivisorEntry]:
    """Every squarefree d <= R with its covered residue classes, ascending d."""
    if R > R_BUDGET:
        raise BudgetError(f"R = {R} exceeds divisor-table budget {R_BUDGET}")
    primes = [int(p) for p in base_primes(int(R))]
    omegas = {p: omega_residues(t, p) for p in primes}
    entries = [DivisorEntry(1, 1, (0,))]

    def grow(start: int, d: int, residues: tuple[int, ...], mu: int) -> None:
        for i in range(start, len(primes)):
            p = primes[i]
            nd = d * p
            if nd > R:
                break
            nres = _crt_merge(d, residues, p, omegas[p])
            entries.append(DivisorEntry(nd, -mu, nres))
            grow(i + 1, nd, nres, -mu)

    grow(0, 1, (0,), 1)
    entries.sort(key=lambda e: e.d)
    assert all(e.d <= R for e in entries)
    return entries


@dataclass(frozen=True)
class WeightBlock:
    """Divisor-sum values for every n in [lo, hi); immutable."""

    lo: int
    hi: int
    values: np.ndarray
    params: WeightParams
    tuple_: OffsetTuple

    def __post_init__(self) -> None:
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return self.hi - self.lo

    def value_at(self, n: int) -> float:
        if not (self.lo <= n < self.hi):
            raise IndexError(f"{n} outside block [{self.lo}, {self.hi})")
        return float(self.values[n - self.lo])


def lambda_block(
    t: OffsetTuple,
    params: WeightParams,
    lo: int,
    hi: int,
    force: bool = False,
    table: list[DivisorEntry] | None = None,
) -> WeightBlock:
    """Divisor sums for all n in [lo, hi) by residue-class accumulation.

    Requires R < lo (the regime every downstream identity assumes) unless
    force is set for exploratory evaluation at small n.
    """
    if lo >= hi:
        raise ValueError(f"empty block [{lo}, {hi})")
    if hi - lo > BLOCK_BUDGET:
        raise BudgetError(f"block of {hi - lo} exceeds budget {BLOCK_BUDGET}")
    if params.R >= lo and not force:
        raise RegimeError(f"R = {params.R} >= block start {lo}; pass force=True to evaluate anyway")
    if table is None:
        table = divisor_table(t, params.R)
    n = hi - lo
    values = np.zeros(n)
    comp = np.zeros(n)
    for entry in table:
        w = _weight_value(entry.mu, entry.d, params.R, params.a)
        d = entry.d
        for r in entry.residues:
            sl = slice((r - lo) % d, None, d)
            # Kahan step, elementwise on the strided view
            v = values[sl]
            y = w - comp[sl]
            s = v + y
            comp[sl] = (s - v) - y
            values[sl] = s
    return WeightBlock(lo, hi, values, params, t)


def _factor_prime_set(m: int, cap: float) -> list[int]:
    """Distinct prime factors of m that are <= cap, by trial division."""
    if m > FACTORING_BUDGET:
        raise BudgetError(f"{m} exceeds factoring budget {FACTORING_BUDGET}")
    out = []
    rest = m
    for p in base_primes(math.isqrt(m)):
        p = int(p)
        if p * p > rest:
            break
        if rest % p == 0:
            while rest % p == 0:
                rest //= p
            if p <= cap:
                out.append(p)
    if rest > 1 and rest <= cap:
        out.append(rest)
    return out


def lambda_bruteforce(t: OffsetTuple, params: WeightParams, n: int) -> float:
    """Independent oracle: factor each n+h, enumerate all squarefree
    divisors <= R of the product, sum weights in ascending-d order.

    The product itself is never formed; only the union of the factors'
    prime sets is used.
    """
    if n + t.offsets[0] < 1:
        raise ValueError(f"n = {n} makes n + h nonpositive")
    prime_set: set[int] = set()
    for h in t.offsets:
        prime_set.update(_factor_prime_set(n + h, params.R))
    primes = sorted(prime_set)

    divisors = [(1, 1)]

    def grow(start: int, d: int, mu: int) -> None:
        for i in range(start, len(primes)):
            nd = d * primes[i]
            if nd > params.R:
                break
            divisors.append((nd, -mu))
            grow(i + 1, nd, -mu)

    grow(0, 1, 1)
    divisors.sort()
    total = 0.0
    comp = 0.0
    for d, mu in divisors:
        w = _weight_value(mu, d, params.R, params.a)
        y = w - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total
