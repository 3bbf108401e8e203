"""Moment sums of the truncated divisor weights, their predicted main terms,
and the two-primes-in-a-window detector.

Three empirical sums are paired with exact-rational prefactor algebra:

  * pure:      sum over N < n <= 2N of  W(n)^2
  * twisted:   sum over N < n <= 2N of  varpi(n+h) * W(n)^2
  * detector:  sum over tuples, n of (sum_h varpi(n+h) - log 3N) * W(n)^2

with W(n) the block weight at exponent a = k + l.  Empirical values are
chunk-partitioned with exactly-rounded per-chunk sums and a fixed pairwise
reduction, so results are bit-identical for any worker count.

Predicted main terms:

  pure:      S(H)   * C(2l, l)     / (k+2l)!  * N (log R)^(k+2l)
  twisted,
   h not in H: S(H+h) * C(2l, l)     / (k+2l)!  * N (log R)^(k+2l)
   h in H:     S(H)   * C(2l+2, l+1) / (k+2l+1)! * N (log R)^(k+2l+1)

The detector prediction multiplies the window/tuple bracket by the matching
prefactor; positivity of the per-n parenthesis forces two primes inside
(n, n + span], and those witnesses are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, RegimeError
from .parallel import block_spans, ordered_map, resolve_workers, tree_fold
from .primes import SEGMENT_FLAGS, prime_flags
from .singular import DEFAULT_TOL, singular_series
from .tuples import UNCHANGED, OffsetTuple, extend
from .weights import DivisorEntry, WeightParams, divisor_table, lambda_block

CHUNK = SEGMENT_FLAGS
DOUBLE_SUM_R_BUDGET = 2000
EXACT_COUNT_R_BUDGET = 500


# ---------------------------------------------------------------------------
# parameters and regime checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SieveParams:
    """One run configuration: scale N, truncation R, tuple size k, weight
    shift l, window length span_bound, and distribution level theta.

    Regime constants: the asymptotic constraints carry unspecified constants,
    so the power-law parts are enforced exactly and the log-power corrections
    default to off (log_power_C = 0); span_factor and scale_ratio bound
    span <= span_factor * log N and log N <= scale_ratio * log R.
    """

    N: int
    R: float
    k: int
    l: int
    span_bound: int
    theta: Fraction = Fraction(1, 2)
    log_power_C: float = 0.0
    span_factor: float = 10.0
    scale_ratio: float = 8.0

    def __post_init__(self) -> None:
        if self.N < 16:
            raise ValueError(f"need N >= 16, got {self.N}")
        if self.R < 1:
            raise ValueError(f"need R >= 1, got {self.R}")
        if self.k < 1 or self.l < 1:
            raise ValueError(f"need k, l >= 1, got k={self.k}, l={self.l}")
        if self.span_bound < 1:
            raise ValueError("span_bound must be >= 1")
        if not isinstance(self.theta, Fraction):
            object.__setattr__(self, "theta", Fraction(self.theta))
        if not (0 < self.theta < 1):
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")

    @property
    def a(self) -> int:
        """Weight exponent used throughout: k + l."""
        return self.k + self.l

    @property
    def log_n(self) -> float:
        return math.log(self.N)

    @property
    def log_r(self) -> float:
        return math.log(self.R)

    def _common_violations(self) -> list[str]:
        out = []
        if self.span_bound > self.span_factor * self.log_n:
            out.append(
                f"span_bound {self.span_bound} > {self.span_factor} * log N = "
                f"{self.span_factor * self.log_n:.2f}"
            )
        if self.R > self.N:
            out.append(f"R {self.R} exceeds N {self.N}")
        if self.log_n > self.scale_ratio * max(self.log_r, 1e-300):
            out.append(f"log N / log R = {self.log_n / self.log_r:.2f} > {self.scale_ratio}")
        return out

    def pure_regime_violations(self) -> list[str]:
        out = self._common_violations()
        cap = math.sqrt(self.N) / self.log_n ** self.log_power_C
        # 1e-12 slack: boundary configurations like R = N^(1/2) exactly must
        # not trip on the rounding of two routes to the same power
        if self.R > cap * (1 + 1e-12):
            out.append(f"R {self.R} > N^(1/2)/(log N)^{self.log_power_C} = {cap:.4g}")
        return out

    def twisted_regime_violations(self) -> list[str]:
        out = self._common_violations()
        cap = self.N ** (float(self.theta) / 2.0) / self.log_n ** self.log_power_C
        if self.R > cap * (1 + 1e-12):
            out.append(
                f"R {self.R} > N^(theta/2)/(log N)^{self.log_power_C} = {cap:.4g} "
                f"at theta = {self.theta}"
            )
        return out

    def doc(self) -> dict:
        return {
            "N": self.N,
            "R": self.R,
            "k": self.k,
            "l": self.l,
            "a": self.a,
            "span_bound": self.span_bound,
            "theta": str(self.theta),
        }


def _enforce_regime(violations: list[str], force: bool) -> list[str]:
    if violations and not force:
        raise RegimeError("; ".join(violations) + " (pass force=True to run anyway)")
    return violations


# ---------------------------------------------------------------------------
# exact-rational prefactor algebra
# ---------------------------------------------------------------------------

def pure_main_prefactor(k: int, l: int) -> Fraction:
    """C(2l, l) / (k + 2l)! -- multiplies S(H) N (log R)^(k+2l)."""
    return Fraction(math.comb(2 * l, l), math.factorial(k + 2 * l))


def twisted_main_prefactor(k: int, l: int, member: bool) -> tuple[Fraction, int]:
    """(rational prefactor, log R power) of the twisted main term."""
    if member:
        return (
            Fraction(math.comb(2 * l + 2, l + 1), math.factorial(k + 2 * l + 1)),
            k + 2 * l + 1,
        )
    return pure_main_prefactor(k, l), k + 2 * l


def binomial_step_ratio(l: int) -> Fraction:
    """C(2l+2, l+1) / C(2l, l); equals 2(2l+1)/(l+1) and tends to 4."""
    return Fraction(math.comb(2 * l + 2, l + 1), math.comb(2 * l, l))


def detector_coefficient(k: int, l: int) -> Fraction:
    """k/(k+2l+1) * 2(2l+1)/(l+1): the log R coefficient in the bracket."""
    return Fraction(k, k + 2 * l + 1) * Fraction(2 * (2 * l + 1), l + 1)


@dataclass(frozen=True)
class ThresholdReport:
    """Exact-rational threshold algebra for a (k, l, theta, eps) choice."""

    k: int
    l: int
    theta: Fraction
    eps: Fraction
    coefficient: Fraction        # k/(k+2l+1) * 2(2l+1)/(l+1)
    theta_term: Fraction         # coefficient * theta / 2
    log_n_coefficient: Fraction  # 1 + eps - theta_term
    bracket_coefficient: Fraction  # theta_term - 1: detector bracket sign at R = N^(theta/2)

    def doc(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "theta": str(self.theta),
            "eps": str(self.eps),
            "coefficient": str(self.coefficient),
            "theta_term": str(self.theta_term),
            "log_n_coefficient": str(self.log_n_coefficient),
            "bracket_coefficient": str(self.bracket_coefficient),
        }


def _as_fraction(x, name: str) -> Fraction:
    if isinstance(x, float):
        raise TypeError(f"{name} must be an exact rational (Fraction, int, or string), not float")
    return Fraction(x)


def threshold(k: int, l: int, theta, eps=0) -> ThresholdReport:
    """Window-length threshold coefficient, exactly rational.

    theta = 1 is accepted so the bare coefficient can be displayed; the
    distribution hypothesis itself only makes sense for theta < 1.
    """
    if k < 1 or l < 1:
        raise ValueError("need k, l >= 1")
    th = _as_fraction(theta, "theta")
    ep = _as_fraction(eps, "eps")
    if not (0 < th <= 1):
        raise ValueError(f"theta must lie in (0, 1], got {th}")
    coeff = detector_coefficient(k, l)
    theta_term = coeff * th / 2
    return ThresholdReport(k, l, th, ep, coeff, theta_term, 1 + ep - theta_term, theta_term - 1)


def gap_bound(theta) -> Fraction:
    """max(0, 1 - 2*theta): the normalized-gap bound a level theta yields."""
    th = _as_fraction(theta, "theta")
    return max(Fraction(0), 1 - 2 * th)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class MomentReport:
    kind: str
    empirical: float
    main_term: float
    ratio: float | None
    params: SieveParams
    offsets: tuple[int, ...]
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def doc(self) -> dict:
        """Canonical (worker-count- and timing-free) document."""
        return {
            "kind": self.kind,
            "empirical": self.empirical,
            "main_term": self.main_term,
            "ratio": self.ratio,
            "params": self.params.doc(),
            "offsets": list(self.offsets),
            "diagnostics": dict(sorted(self.diagnostics.items())),
        }


@dataclass
class DetectorReport:
    mode: str
    empirical: float
    predicted: float
    bracket: float
    positive_count: int
    witnesses: list[dict]
    tuple_count: int
    params: SieveParams
    diagnostics: dict = field(default_factory=dict)
    positives: list[np.ndarray] = field(default_factory=list)  # per tuple, optional
    wall_time: float = 0.0

    def doc(self) -> dict:
        return {
            "kind": "detector",
            "mode": self.mode,
            "empirical": self.empirical,
            "predicted": self.predicted,
            "bracket": self.bracket,
            "positive_count": self.positive_count,
            "witnesses": self.witnesses,
            "tuple_count": self.tuple_count,
            "params": self.params.doc(),
            "diagnostics": dict(sorted(self.diagnostics.items())),
        }


# ---------------------------------------------------------------------------
# pure moment
# ---------------------------------------------------------------------------

def _pure_chunk(args) -> float:
    t, wp, lo, hi, force = args
    blk = lambda_block(t, wp, lo, hi, force=force)
    return math.fsum(blk.values * blk.values)


def pure_moment(
    t: OffsetTuple,
    params: SieveParams,
    workers: int | None = None,
    force: bool = False,
) -> MomentReport:
    """Empirical sum of W(n)^2 over (N, 2N] against its predicted main term."""
    import time

    start = time.perf_counter()
    if t.k != params.k:
        raise ValueError(f"tuple size {t.k} does not match params.k = {params.k}")
    violations = _enforce_regime(params.pure_regime_violations(), force)
    wp = WeightParams(params.R, params.a)
    spans = block_spans(params.N + 1, 2 * params.N + 1, CHUNK)
    partials = ordered_map(_pure_chunk, [(t, wp, lo, hi, force) for lo, hi in spans], workers)
    empirical = tree_fold(partials, lambda x, y: x + y)

    dens = singular_series(t, DEFAULT_TOL)
    main = float(pure_main_prefactor(params.k, params.l)) * dens.value
    main *= params.N * params.log_r ** (params.k + 2 * params.l)
    report = MomentReport(
        kind="pure",
        empirical=empirical,
        main_term=main,
        ratio=empirical / main if main != 0.0 else None,
        params=params,
        offsets=t.offsets,
        diagnostics={
            "chunks": len(spans),
            "regime_violations": violations,
            "singular_series": dens.value,
        },
    )
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# exact double sums (small R)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _DivisorInfo:
    d: int
    primes: tuple[int, ...]
    weight: float


def _divisor_infos(t: OffsetTuple, params: "SieveParams | WeightParams") -> list[_DivisorInfo]:
    from .weights import _weight_value  # shared weight evaluation

    wp = WeightParams(params.R, params.a)
    return [
        _DivisorInfo(e.d, _entry_primes(e), _weight_value(e.mu, e.d, wp.R, wp.a))
        for e in divisor_table(t, wp.R)
    ]


def _entry_primes(entry: DivisorEntry) -> tuple[int, ...]:
    d = entry.d
    out = []
    m = d
    f = 2
    while f * f <= m:
        if m % f == 0:
            out.append(f)
            while m % f == 0:
                m //= f
        f += 1
    if m > 1:
        out.append(m)
    return tuple(out)


def double_sum_T(
    t: OffsetTuple,
    params: "SieveParams | WeightParams",
    r_budget: int = DOUBLE_SUM_R_BUDGET,
) -> float:
    """The exact bilinear form sum_{d1,d2} w(d1) w(d2) |Omega([d1,d2])| / [d1,d2].

    Direct double summation; feasible for R up to a few thousand.  Only R and
    the weight exponent are read, so bare WeightParams work too.
    """
    if params.R > r_budget:
        raise BudgetError(f"R = {params.R} exceeds double-sum budget {r_budget}")
    infos = _divisor_infos(t, params)
    omega_of = {p: 0 for info in infos for p in info.primes}
    from .tuples import omega_size

    for p in omega_of:
        omega_of[p] = omega_size(t, p)
    terms = []
    for i1 in infos:
        for i2 in infos:
            union = set(i1.primes) | set(i2.primes)
            lcm = 1
            omega = 1
            for p in union:
                lcm *= p
                omega *= omega_of[p]
            terms.append(i1.weight * i2.weight * omega / lcm)
    return math.fsum(terms)


def double_sum_exact_counts(
    t: OffsetTuple,
    params: "SieveParams | WeightParams",
    lo: int,
    hi: int,
    r_budget: int = EXACT_COUNT_R_BUDGET,
) -> float:
    """sum_{d1,d2} w(d1) w(d2) * #{n in [lo, hi): [d1,d2] divides P(n)}.

    Membership counts are exact integers (per residue class of the lcm), so
    this equals the blockwise sum of W(n)^2 up to float summation only.
    """
    if params.R > r_budget:
        raise BudgetError(f"R = {params.R} exceeds exact-count budget {r_budget}")
    wp = WeightParams(params.R, params.a)
    entries = divisor_table(t, wp.R)
    from .weights import _weight_value

    weights_by_d = {e.d: _weight_value(e.mu, e.d, wp.R, wp.a) for e in entries}
    prime_sets = {e.d: frozenset(_entry_primes(e)) for e in entries}

    # residue sets for every lcm that appears, built once
    lcm_cache: dict[frozenset, tuple[int, tuple[int, ...]]] = {}

    def lcm_residues(union: frozenset) -> tuple[int, tuple[int, ...]]:
        if union not in lcm_cache:
            m = 1
            res: tuple[int, ...] = (0,)
            from .tuples import omega_residues
            from .weights import _crt_merge

            for p in sorted(union):
                res = _crt_merge(m, res, p, omega_residues(t, p))
                m *= p
            lcm_cache[union] = (m, res)
        return lcm_cache[union]

    terms = []
    ds = [e.d for e in entries]
    for d1 in ds:
        for d2 in ds:
            union = prime_sets[d1] | prime_sets[d2]
            m, res = lcm_residues(union)
            count = 0
            for r in res:
                first = lo + ((r - lo) % m)
                if first < hi:
                    count += (hi - 1 - first) // m + 1
            terms.append(weights_by_d[d1] * weights_by_d[d2] * count)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# twisted moment
# ---------------------------------------------------------------------------

def _twisted_chunk(args) -> float:
    t, wp, lo, hi, h, force = args
    blk = lambda_block(t, wp, lo, hi, force=force)
    flags = prime_flags(lo + h, hi + h)
    shifted = np.arange(lo + h, hi + h, dtype=np.int64)[flags]
    logs = np.log(shifted.astype(np.float64))
    vals = blk.values[flags]
    return math.fsum(vals * vals * logs)


def twisted_moment(
    t: OffsetTuple,
    h: int,
    params: SieveParams,
    workers: int | None = None,
    force: bool = False,
) -> MomentReport:
    """Empirical sum of varpi(n+h) W(n)^2 over (N, 2N] with the main term
    picked by membership of h in the tuple."""
    import time

    start = time.perf_counter()
    if t.k != params.k:
        raise ValueError(f"tuple size {t.k} does not match params.k = {params.k}")
    if not (1 <= h <= params.span_bound):
        raise ValueError(f"h = {h} outside [1, span_bound = {params.span_bound}]")
    if params.span_bound < t.span_bound:
        raise ValueError(
            f"params.span_bound {params.span_bound} below tuple span {t.span_bound}"
        )
    violations = _enforce_regime(params.twisted_regime_violations(), force)
    wp = WeightParams(params.R, params.a)
    spans = block_spans(params.N + 1, 2 * params.N + 1, CHUNK)
    partials = ordered_map(_twisted_chunk, [(t, wp, lo, hi, h, force) for lo, hi in spans], workers)
    empirical = tree_fold(partials, lambda x, y: x + y)

    # extension lives in [1, params.span_bound]
    spanned = OffsetTuple(t.offsets, params.span_bound)
    extended = extend(spanned, h)
    member = extended is UNCHANGED
    prefactor, power = twisted_main_prefactor(params.k, params.l, member)
    if member:
        dens = singular_series(spanned, DEFAULT_TOL)
    else:
        dens = singular_series(extended, DEFAULT_TOL)
    main = float(prefactor) * dens.value * params.N * params.log_r ** power
    report = MomentReport(
        kind="twisted",
        empirical=empirical,
        main_term=main,
        ratio=empirical / main if main != 0.0 else None,
        params=params,
        offsets=t.offsets,
        diagnostics={
            "h": h,
            "h_member": member,
            "chunks": len(spans),
            "regime_violations": violations,
            "singular_series": dens.value,
            "log_r_power": power,
        },
    )
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# detector
# ---------------------------------------------------------------------------

def _detector_chunk(args) -> tuple[float, np.ndarray, list[tuple[int, int, int]]]:
    """One (tuple, chunk) unit: (partial sum, flagged n, capped witnesses)."""
    t, wp, lo, hi, span, log3n, mode, cap, force = args
    blk = lambda_block(t, wp, lo, hi, force=force)
    n = np.arange(lo, hi, dtype=np.int64)

    flags = prime_flags(lo + 1, hi + span)
    pos = lo + 1 + np.flatnonzero(flags)

    if mode == "window":
        # extended-precision prefix sums: the difference of two prefixes must
        # resolve individual windows without drift over the chunk
        logs = np.log(pos.astype(np.float64)).astype(np.longdouble)
        cum = np.concatenate([[np.longdouble(0)], np.cumsum(logs)])
        j1 = np.searchsorted(pos, n, side="right")
        j2 = np.searchsorted(pos, n + span, side="right")
        w = (cum[j2] - cum[j1]).astype(np.float64) - log3n
    else:  # per-offset sum
        base = lo + 1
        w = np.full(hi - lo, -log3n)
        for h in t.offsets:
            hit = flags[n + h - base]
            w[hit] += np.log((n[hit] + h).astype(np.float64))
        j1 = np.searchsorted(pos, n, side="right")

    vals = blk.values
    partial = math.fsum(w * vals * vals)

    flagged_idx = np.flatnonzero(w > 0.0)
    flagged = n[flagged_idx]
    witnesses: list[tuple[int, int, int]] = []
    for i in flagged_idx[:cap]:
        ni = int(n[i])
        if mode == "window":
            a = int(j1[i])
            if int(j2[i]) - a >= 2:
                witnesses.append((ni, int(pos[a]), int(pos[a + 1])))
        else:
            hits = [ni + h for h in t.offsets if flags[ni + h - (lo + 1)]]
            if len(hits) >= 2:
                witnesses.append((ni, hits[0], hits[1]))
    return partial, flagged, witnesses


def two_primes_detector(
    params: SieveParams,
    tuples: Iterable[OffsetTuple] | Sequence[OffsetTuple],
    h_mode: str = "window",
    workers: int | None = None,
    force: bool = False,
    witness_cap: int = 1000,
    collect_positives: bool = False,
) -> DetectorReport:
    """Weighted two-primes detector over the supplied tuples.

    h_mode "window" sums varpi(n+h) over all integers h <= span_bound; mode
    "tuple" sums only over the tuple's own offsets.  Every n whose inner
    parenthesis is positive is counted, and for the first witness_cap such n
    the two witnessing primes in (n, n + span_bound] are reported.
    """
    import time

    start = time.perf_counter()
    if h_mode not in ("window", "tuple"):
        raise ValueError(f"unknown h_mode {h_mode!r}")
    tuple_list = list(tuples)
    if not tuple_list:
        raise ValueError("empty tuple source")
    for t in tuple_list:
        if t.k != params.k:
            raise ValueError(f"tuple size {t.k} does not match params.k = {params.k}")
    seen: set[str] = set()
    violations = [
        v
        for v in params.pure_regime_violations() + params.twisted_regime_violations()
        if not (v in seen or seen.add(v))
    ]
    violations = _enforce_regime(violations, force)
    resolve_workers(workers)

    wp = WeightParams(params.R, params.a)
    span = params.span_bound
    log3n = math.log(3 * params.N)
    spans = block_spans(params.N + 1, 2 * params.N + 1, CHUNK)

    per_tuple_sums: list[float] = []
    witnesses: list[dict] = []
    positives: list[np.ndarray] = []
    positive_count = 0
    for ti, t in enumerate(tuple_list):
        tasks = [(t, wp, lo, hi, span, log3n, h_mode, witness_cap, force) for lo, hi in spans]
        results = ordered_map(_detector_chunk, tasks, workers)
        per_tuple_sums.append(tree_fold([r[0] for r in results], lambda x, y: x + y))
        flagged_parts = [r[1] for r in results]
        positive_count += int(sum(len(f) for f in flagged_parts))
        if collect_positives:
            positives.append(np.concatenate(flagged_parts))
        for _, _, wit in results:
            for n, p1, p2 in wit:
                if len(witnesses) < witness_cap:
                    witnesses.append({"tuple_index": ti, "n": n, "p1": p1, "p2": p2})

    empirical = tree_fold(per_tuple_sums, lambda x, y: x + y)

    coeff = float(detector_coefficient(params.k, params.l))
    pref = float(pure_main_prefactor(params.k, params.l))
    if h_mode == "window":
        bracket = span + coeff * params.log_r - params.log_n
        predicted = bracket * pref * params.N * float(span) ** params.k
        predicted *= params.log_r ** (params.k + 2 * params.l)
    else:
        bracket = coeff * params.log_r - params.log_n
        scale = pref * params.N * params.log_r ** (params.k + 2 * params.l)
        predicted = math.fsum(
            singular_series(t, DEFAULT_TOL).value * scale * bracket for t in tuple_list
        )

    report = DetectorReport(
        mode=h_mode,
        empirical=empirical,
        predicted=predicted,
        bracket=bracket,
        positive_count=positive_count,
        witnesses=witnesses,
        tuple_count=len(tuple_list),
        params=params,
        diagnostics={
            "chunks": len(spans),
            "regime_violations": violations,
            "witness_cap": witness_cap,
            "a": params.a,
            "log_3n_literal": log3n,
            # the window-mode prediction refers to the full k-subset family
            "full_family_count": math.comb(span, params.k) if h_mode == "window" else len(tuple_list),
        },
        positives=positives,
    )
    report.wall_time = time.perf_counter() - start
    return report
