import math
from fractions import Fraction

import numpy as np
import pytest

from gapsieve.errors import BudgetError, RegimeError
from gapsieve.moments import (
    SieveParams,
    binomial_step_ratio,
    detector_coefficient,
    double_sum_T,
    double_sum_exact_counts,
    gap_bound,
    two_primes_detector,
    pure_main_prefactor,
    twisted_main_prefactor,
    pure_moment,
    threshold,
    twisted_moment,
)
from gapsieve.primes import prime_flags
from gapsieve.tuples import SEPTUPLE_OFFSETS, TWIN_OFFSETS, OffsetTuple
from gapsieve.weights import WeightParams, lambda_block

TWIN = OffsetTuple(TWIN_OFFSETS)


def _params(N, k=2, l=1, span=None, r_exp=0.25, theta=Fraction(1, 2)):
    return SieveParams(N=N, R=float(N) ** r_exp, k=k, l=l,
                       span_bound=span or 3, theta=theta)


# ---------------------------------------------------------------------------
# exact-rational algebra
# ---------------------------------------------------------------------------

def test_pure_main_prefactor_example():
    assert pure_main_prefactor(2, 1) == Fraction(2, 24)


def test_septuple_prefactor_uses_nine_factorial():
    assert pure_main_prefactor(7, 1) == Fraction(2, math.factorial(9))


def test_twisted_membership_translation_identity():
    # member case at (k, l) == non-member case at (k-1, l+1), exactly
    for k in range(2, 11):
        for l in range(1, 5):
            member = twisted_main_prefactor(k, l, member=True)
            translated = twisted_main_prefactor(k - 1, l + 1, member=False)
            assert member == translated


def test_binomial_step_identity():
    for l in range(1, 21):
        assert binomial_step_ratio(l) == Fraction(2 * (2 * l + 1), l + 1)
    assert binomial_step_ratio(1) == 3


def test_threshold_exactness():
    rep = threshold(7, 1, 1)
    assert rep.coefficient == Fraction(21, 10)
    rep = threshold(7, 1, "20/21")
    assert rep.theta_term == 1 and rep.log_n_coefficient == 0
    assert gap_bound("1/2") == 0
    assert gap_bound("1/4") == Fraction(1, 2)
    with pytest.raises(TypeError):
        threshold(7, 1, 0.5)  # floats are not exact rationals


def test_threshold_tends_to_eps():
    # theta = 1/2 and l near sqrt(k): the log N coefficient drains to eps
    eps = Fraction(1, 100)
    prev = None
    for k in (16, 256, 4096, 65536):
        l = math.isqrt(k)
        rep = threshold(k, l, Fraction(1, 2), eps)
        drift = abs(rep.log_n_coefficient - eps)
        if prev is not None:
            assert drift < prev
        prev = drift
    assert prev < Fraction(1, 50)


def test_detector_coefficient():
    assert detector_coefficient(7, 1) == Fraction(7, 10) * 3


# ---------------------------------------------------------------------------
# double sums
# ---------------------------------------------------------------------------

def test_double_sum_hand_checkable():
    # R = 3, a = 2: nine terms over d in {1,2,3}^2 with w(2)=1, w(3)=2
    wp = WeightParams(3.0, 2)
    lam = {1: math.log(3.0) ** 2 / 2, 2: -math.log(3.0 / 2) ** 2 / 2, 3: -0.0}
    omega = {1: (1, 1), 2: (2, 1), 3: (3, 2)}
    expected = []
    for d1 in (1, 2, 3):
        for d2 in (1, 2, 3):
            primes = {p for p in (d1, d2) if p > 1}
            lcm = math.prod(primes) if primes else 1
            w = math.prod(omega[p][1] for p in primes) if primes else 1
            expected.append(lam[d1] * lam[d2] * w / lcm)
    assert double_sum_T(TWIN, wp) == pytest.approx(math.fsum(expected), rel=1e-14)


def test_double_sum_r_below_two():
    wp = WeightParams(1.5, 3)
    assert double_sum_T(TWIN, wp) == (math.log(1.5) ** 3 / 6) ** 2


def test_double_sum_budget():
    with pytest.raises(BudgetError):
        double_sum_T(TWIN, WeightParams(5000.0, 2))


def test_bilinear_identity_exact_counts():
    wp = WeightParams(30.0, 3)
    lo, hi = 10**4, 12 * 10**3
    blk = lambda_block(TWIN, wp, lo, hi)
    lhs = math.fsum(blk.values * blk.values)
    rhs = double_sum_exact_counts(TWIN, wp, lo, hi)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_double_sum_density_times_n_matches_exact_counts():
    # N * T differs from the exact-count form only by per-pair boundary
    # effects, each at most the class count of the lcm
    from gapsieve.moments import _divisor_infos
    from gapsieve.tuples import omega_size

    wp = WeightParams(30.0, 3)
    lo, hi = 10**4, 2 * 10**4
    N = hi - lo
    density = N * double_sum_T(TWIN, wp)
    exact = double_sum_exact_counts(TWIN, wp, lo, hi)
    infos = _divisor_infos(TWIN, wp)
    omega_of = {p: omega_size(TWIN, p) for i in infos for p in i.primes}
    bound = 0.0
    for i1 in infos:
        for i2 in infos:
            union = set(i1.primes) | set(i2.primes)
            w = math.prod(omega_of[p] for p in union)
            bound += abs(i1.weight * i2.weight) * w
    assert abs(density - exact) <= bound
    assert density == pytest.approx(exact, rel=0.05)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def test_pure_moment_small_scale():
    rep = pure_moment(TWIN, _params(10**5))
    assert 0.4 <= rep.ratio <= 2.5
    assert rep.diagnostics["regime_violations"] == []


def test_pure_moment_regime_guard():
    bad = SieveParams(N=10**4, R=5000.0, k=2, l=1, span_bound=3)
    with pytest.raises(RegimeError):
        pure_moment(TWIN, bad)
    rep = pure_moment(TWIN, bad, force=True)
    assert rep.diagnostics["regime_violations"]


def test_pure_moment_tuple_size_must_match():
    with pytest.raises(ValueError):
        pure_moment(OffsetTuple((1, 3, 7)), _params(10**4))


def test_twisted_membership_identity_bitwise():
    # h = 3 inside the tuple vs the reduced tuple at (k-1, l+1)
    N = 10**4
    full = twisted_moment(TWIN, 3, _params(N, k=2, l=1, span=10))
    reduced = twisted_moment(OffsetTuple((1,)), 3, _params(N, k=1, l=2, span=10))
    assert full.empirical == reduced.empirical
    assert full.main_term == reduced.main_term
    assert full.diagnostics["h_member"] and not reduced.diagnostics["h_member"]


def test_twisted_inadmissible_extension():
    # {1,3} + 5 covers everything mod 3: zero main term, small empirical
    N = 2 * 10**5
    bad = twisted_moment(TWIN, 5, _params(N, span=10))
    good = twisted_moment(TWIN, 7, _params(N, span=10))
    assert bad.main_term == 0.0 and bad.ratio is None
    assert good.main_term > 0
    assert bad.empirical < good.empirical


def test_twisted_h_range_check():
    with pytest.raises(ValueError):
        twisted_moment(TWIN, 99, _params(10**4, span=10))


def test_detector_decomposition():
    # detector total == sum_h twisted - log(3N) * pure, independent routes
    N, span = 10**5, 30
    params = _params(N, span=span)
    det = two_primes_detector(params, [TWIN], h_mode="window")
    twisted_parts = [twisted_moment(TWIN, h, params).empirical for h in range(1, span + 1)]
    pure_part = pure_moment(TWIN, params).empirical
    recon = math.fsum(twisted_parts) - math.log(3 * N) * pure_part
    assert det.empirical == pytest.approx(recon, rel=1e-9)


def test_detector_witnesses_are_real_primes():
    N, span = 10**5, 40
    det = two_primes_detector(_params(N, span=span), [TWIN], h_mode="window",
                       collect_positives=True, witness_cap=200)
    assert det.positive_count > 0
    assert det.witnesses
    flags = prime_flags(N + 1, 2 * N + span + 1)
    for w in det.witnesses:
        n, p1, p2 = w["n"], w["p1"], w["p2"]
        assert n < p1 < p2 <= n + span
        assert flags[p1 - (N + 1)] and flags[p2 - (N + 1)]
    # every flagged n has at least two primes in its window
    counts = np.cumsum(flags.astype(np.int64))
    for arr in det.positives:
        idx_hi = arr + span - (N + 1)
        idx_lo = arr - (N + 1)
        window_counts = counts[idx_hi] - np.where(idx_lo >= 0, counts[idx_lo], 0)
        assert (window_counts >= 2).all()


def test_detector_tuple_mode_septuple_shape():
    sep = OffsetTuple(SEPTUPLE_OFFSETS)
    params = SieveParams(N=10**5, R=(10**5) ** 0.25, k=7, l=1, span_bound=22)
    det = two_primes_detector(params, [sep], h_mode="tuple")
    assert det.diagnostics["a"] == 8  # weight exponent k + l
    assert det.bracket == pytest.approx(2.1 * params.log_r - params.log_n, rel=1e-12)
    assert det.predicted < 0  # R = N^(1/4) sits below the positivity threshold


def test_detector_empty_source():
    with pytest.raises(ValueError):
        two_primes_detector(_params(10**4), [], h_mode="window")


def test_twisted_ratio_at_ten_million():
    # admissible extension {1,3,7}: empirical over main term lands in the
    # same coarse bracket as the pure moment
    rep = twisted_moment(TWIN, 7, _params(10**7, span=10))
    assert 0.4 <= rep.ratio <= 2.5


def test_pure_moment_worker_invariance():
    params = _params(10**5)
    serial = pure_moment(TWIN, params, workers=1)
    pooled = pure_moment(TWIN, params, workers=3)
    assert serial.empirical == pooled.empirical
    assert serial.doc() == pooled.doc()
