"""Tuple density constants via truncated Euler products with certified tails,
and the normalized tuple-average that should tend to 1.

For a k-tuple the density constant is

    prod_p (1 - w(p)/p) * (1 - 1/p)^(-k),

with w(p) the number of residue classes the tuple covers mod p.  Since
w(p) = k for every prime beyond the tuple's span, the product splits into

  * an exact part over p <= span_bound (actual w(p), may vanish),
  * a generic part over span_bound < p <= P0 with w(p) = k, shared by every
    k-tuple of the same span and cached as a cumulative table,
  * an analytic tail for p > P0.

The tail comes from expanding the log of each generic factor:

    log(1 - k/p) - k log(1 - 1/p) = - sum_{j>=2} (k^j - k) / (j p^j),

so the tail over p > P0 is  - sum_{j>=2} (k^j - k)/j * P_j(P0)  with
P_j(P0) = sum_{p > P0} p^(-j), evaluated as primezeta(j) minus the partial
sum over cached primes.  The series is cut at J once the integral bound

    sum_{j>J} (k^j - k)/j * P_j(P0)  <=  P0 * (k/P0)^(J+1) / (1 - k/P0)

drops below the target; that bound plus an explicit float-accumulation
allowance is the certified tail_bound.  Extended precision (longdouble) is
used for the cumulative tables and the tail series because the j-series
suffers cancellation when P_j is formed by subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import BudgetError, ToleranceError
from .parallel import resolve_workers
from .primes import base_primes
from .tuples import OffsetTuple, enumerate_tuples, extended_omega_size, omega_size, tuple_count

DEFAULT_TOL = 1e-12
TRUNCATION_FLOOR = 1000
MAX_TRUNCATION_PRIME = 10**8
_SERIES_CAP = 80

_EPS = float(np.finfo(np.float64).eps)
_EPS_LD = float(np.finfo(np.longdouble).eps)


@dataclass(frozen=True)
class SingularSeriesValue:
    """Density constant with its truncation point and certified log-error."""

    value: float
    truncation_prime: int
    tail_bound: float


@lru_cache(maxsize=None)
def _prime_zeta_ld(j: int) -> np.longdouble:
    """sum over all primes of p^(-j), at longdouble precision."""
    with mpmath.workdps(30):
        return np.longdouble(mpmath.nstr(mpmath.primezeta(j), 25))


class _GenericTables:
    """Cached per-k cumulative sums of the generic log-factors over primes."""

    def __init__(self) -> None:
        self._primes: np.ndarray = np.array([], dtype=np.int64)
        self._limit = 0
        self._per_k: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _ensure_primes(self, limit: int) -> None:
        if limit <= self._limit:
            return
        self._primes = base_primes(limit)
        self._limit = limit
        self._per_k.clear()

    def tables(self, k: int, limit: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(primes, cum, cumabs): prefix sums of log factors for w(p) = k.

        cum[i] = sum over the first i primes > k of the generic log factor;
        primes <= k contribute 0 (the generic form is invalid there and such
        primes are always handled by the exact part).
        """
        self._ensure_primes(limit)
        if k not in self._per_k:
            p = self._primes.astype(np.longdouble)
            g = np.zeros_like(p)
            mask = self._primes > k
            pm = p[mask]
            g[mask] = np.log1p(-k / pm) - k * np.log1p(-1.0 / pm)
            cum = np.concatenate([[np.longdouble(0)], np.cumsum(g)])
            cumabs = np.concatenate([[np.longdouble(0)], np.cumsum(np.abs(g))])
            self._per_k[k] = (cum, cumabs)
        cum, cumabs = self._per_k[k]
        return self._primes, cum, cumabs

    def partial_power_sum(self, j: int, p0: int) -> np.longdouble:
        """sum of p^(-j) over cached primes p <= p0, extended precision."""
        self._ensure_primes(p0)
        ps = self._primes[: int(np.searchsorted(self._primes, p0, side="right"))]
        return (ps.astype(np.longdouble) ** np.longdouble(-j)).sum()


_TABLES = _GenericTables()


@lru_cache(maxsize=None)
def _tail_correction(k: int, p0: int, target: float) -> tuple[float, float]:
    """(correction, certified bound) for the log-tail over primes > p0.

    The bound covers both the dropped j > J terms and the cancellation noise
    of forming P_j by subtraction at extended precision.
    """
    if p0 < 2 * k:
        raise ToleranceError(f"truncation prime {p0} must exceed 2k = {2 * k}")
    ratio = k / p0
    corr = np.longdouble(0)
    noise = 0.0
    j = 1
    while True:
        j += 1
        if j > _SERIES_CAP:
            raise ToleranceError(f"tail series did not reach target {target} by j={_SERIES_CAP}")
        # remaining terms after j-1, bounded via P_i(p0) <= p0^(1-i)
        remaining = p0 * ratio**j / (1.0 - ratio)
        if remaining < target:
            break
        pz = _prime_zeta_ld(j)
        tail_j = pz - _TABLES.partial_power_sum(j, p0)
        if tail_j < 0:  # pure cancellation noise; the true tail is >= 0
            tail_j = np.longdouble(0)
        coeff = np.longdouble(k**j - k) / j
        corr -= coeff * tail_j
        noise += 2.0 * _EPS_LD * float(coeff * pz)
    return float(corr), remaining + noise


def singular_series(
    t: OffsetTuple,
    tol: float = DEFAULT_TOL,
    truncation_prime: int | None = None,
) -> SingularSeriesValue:
    """Density constant of the tuple with a certified tail bound < tol."""
    return _singular_series_from_sizes(
        lambda p: omega_size(t, p), t.k, t.span_bound, tol, truncation_prime
    )


def singular_series_extended(
    t: OffsetTuple,
    h: int,
    tol: float = DEFAULT_TOL,
    truncation_prime: int | None = None,
) -> SingularSeriesValue:
    """Density constant of t extended by h, computed from the base tuple's
    residue profile (the independent route; h must not be a member)."""
    if h in t.offsets:
        raise ValueError(f"{h} is already an offset of {t}")
    if not (1 <= h <= t.span_bound):
        raise ValueError(f"extension offset {h} outside [1, {t.span_bound}]")
    return _singular_series_from_sizes(
        lambda p: extended_omega_size(t, h, p), t.k + 1, t.span_bound, tol, truncation_prime
    )


def _singular_series_from_sizes(
    size_of, k: int, span_bound: int, tol: float, truncation_prime: int | None
) -> SingularSeriesValue:
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if tol < 1e-14:
        raise ToleranceError(f"tolerance {tol} below double-precision floor 1e-14")
    p0 = truncation_prime if truncation_prime is not None else max(TRUNCATION_FLOOR, span_bound)
    if p0 < span_bound:
        raise ValueError(
            f"truncation prime {p0} below span bound {span_bound}: "
            "the non-generic primes would be silently truncated"
        )
    if p0 > MAX_TRUNCATION_PRIME:
        raise ToleranceError(f"truncation prime {p0} exceeds cap {MAX_TRUNCATION_PRIME}")

    # exact factors at p <= span_bound, compensated accumulation
    log_small = 0.0
    comp = 0.0
    abs_small = 0.0
    for p in base_primes(span_bound):
        p = int(p)
        w = size_of(p)
        if w == p:
            return SingularSeriesValue(0.0, p0, 0.0)
        term = math.log1p(-w / p) - k * math.log1p(-1.0 / p)
        abs_small += abs(term)
        y = term - comp
        s = log_small + y
        comp = (s - log_small) - y
        log_small = s

    primes, cum, cumabs = _TABLES.tables(k, p0)
    i1 = int(np.searchsorted(primes, span_bound, side="right"))
    i2 = int(np.searchsorted(primes, p0, side="right"))
    log_generic = float(cum[i2] - cum[i1])
    generic_abs = float(cumabs[i2] - cumabs[i1])

    corr, tail_neglect = _tail_correction(k, p0, tol / 4.0)

    log_total = log_small + log_generic + corr
    # float allowance: Kahan small part, longdouble cumulative difference,
    # and the final three-term combination
    fp_slack = (
        4.0 * _EPS * (abs_small + abs(corr) + abs(log_total) + 1.0)
        + (i2 - i1) * _EPS_LD * (generic_abs + 1.0)
    )
    tail_bound = tail_neglect + fp_slack
    if tail_bound >= tol:
        raise ToleranceError(
            f"certified tail bound {tail_bound:.3e} does not reach tol {tol:.3e} "
            f"at truncation prime {p0}"
        )
    return SingularSeriesValue(math.exp(log_total), p0, tail_bound)


@dataclass(frozen=True)
class TupleAverageReport:
    """Normalized tuple-density average over k-subsets of [1, span_bound].

    normalized = k! * (sum of density constants over unordered k-subsets)
    divided by span_bound^k; tends to 1 as the span grows.
    """

    span_bound: int
    k: int
    normalized: float
    tuple_sum: float
    tuple_count: int
    stride: int
    phase: int
    convention: str = "unordered subsets, k!-normalized"


def gallagher_average(
    span_bound: int,
    k: int,
    tol: float = DEFAULT_TOL,
    enumeration_budget: int = 2_000_000,
    stride: int = 1,
    phase: int = 0,
    workers: int | None = None,
) -> TupleAverageReport:
    """Average the density constant over all k-subsets of [1, span_bound].

    Enumeration cost is C(span_bound, k) / stride; exceeding the budget
    without sampling is an error rather than a silent long run.
    """
    total = tuple_count(span_bound, k)
    if total // stride > enumeration_budget:
        raise BudgetError(
            f"C({span_bound},{k})/{stride} = {total // stride} exceeds budget "
            f"{enumeration_budget}; enable stride sampling"
        )
    resolve_workers(workers)  # validated; the sum itself is one fixed-order pass
    values = []
    count = 0
    for t in enumerate_tuples(span_bound, k, stride=stride, phase=phase):
        values.append(singular_series(t, tol).value)
        count += 1
    tuple_sum = math.fsum(values)
    normalized = math.factorial(k) * tuple_sum * stride / float(span_bound) ** k
    return TupleAverageReport(span_bound, k, normalized, tuple_sum, count, stride, phase)
