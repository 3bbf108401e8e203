import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapsieve.errors import CoprimalityError, SieveRangeError
from gapsieve.primes import (
    SUPPORTED_SIEVE_BOUND,
    PrimeSegment,
    ThetaStarQuery,
    chebyshev_theta,
    min_gap_in,
    primes_in,
    sieve_segment,
    theta_star,
    varpi,
)


def test_first_primes():
    assert list(sieve_segment(2, 12).primes()) == [2, 3, 5, 7, 11]


def test_known_decade():
    assert list(sieve_segment(90, 100).primes()) == [97]


def test_million_window_against_trial_division(trial_division_is_prime):
    seg = sieve_segment(10**6, 10**6 + 10**3)
    expected = [n for n in range(10**6, 10**6 + 10**3) if trial_division_is_prime(n)]
    assert list(seg.primes()) == expected
    assert seg.count() == 75


def test_range_errors():
    with pytest.raises(SieveRangeError):
        sieve_segment(10, 10)
    with pytest.raises(SieveRangeError):
        sieve_segment(1, 5)
    with pytest.raises(SieveRangeError):
        sieve_segment(2, SUPPORTED_SIEVE_BOUND + 1)


def test_segment_immutable():
    seg = sieve_segment(2, 50)
    with pytest.raises(ValueError):
        seg.flags[0] = False


@given(
    lo=st.integers(min_value=2, max_value=5000),
    width1=st.integers(min_value=1, max_value=500),
    width2=st.integers(min_value=1, max_value=500),
)
@settings(max_examples=40, deadline=None)
def test_segment_concatenation(lo, width1, width2):
    mid = lo + width1
    hi = mid + width2
    joined = np.concatenate([sieve_segment(lo, mid).flags, sieve_segment(mid, hi).flags])
    assert np.array_equal(joined, sieve_segment(lo, hi).flags)


def test_varpi_examples():
    assert varpi(7) == math.log(7)
    assert varpi(8) == 0.0
    assert varpi(1) == 0.0
    with pytest.raises(ValueError):
        varpi(0)


def test_varpi_matches_segment_flags():
    seg = sieve_segment(500, 1500)
    for n in range(500, 1500, 7):
        assert (varpi(n) > 0) == seg.is_prime(n)


def test_theta_star_examples():
    # primes in (10, 20] congruent to 1 mod 3 are 13 and 19
    v = theta_star(ThetaStarQuery(10, 1, 3))
    assert v == pytest.approx(math.log(13) + math.log(19), abs=1e-12)

    # q = 1 imposes no congruence
    total = theta_star(ThetaStarQuery(10, 1, 1))
    assert total == pytest.approx(math.log(11 * 13 * 17 * 19), abs=1e-12)

    with pytest.raises(CoprimalityError):
        ThetaStarQuery(2, 2, 4)


def test_theta_star_additivity():
    # partition of primes in (y, 2y] by residue class mod q
    y, q = 300, 12
    total = math.fsum(
        theta_star(ThetaStarQuery(y, a, q)) for a in range(q) if math.gcd(a, q) == 1
    )
    all_primes = primes_in(y + 1, 2 * y + 1)
    in_q_classes = [int(p) for p in all_primes if math.gcd(int(p) % q, q) == 1]
    assert total == pytest.approx(math.fsum(math.log(p) for p in in_q_classes), rel=1e-12)
    # primes dividing q account for the remainder
    rest = [int(p) for p in all_primes if math.gcd(int(p) % q, q) != 1]
    assert all(q % p == 0 for p in rest)


def test_chebyshev_theta_mertens_window():
    assert 0.9 <= chebyshev_theta(10**6) / 10**6 <= 1.1


def test_min_gap_examples():
    gap, at = min_gap_in(2, 10)
    assert (gap, at) == (1, 2)
    with pytest.raises(SieveRangeError):
        min_gap_in(24, 28)


def test_min_gap_finds_twin_above_million(trial_division_is_prime):
    gap, at = min_gap_in(10**6, 2 * 10**6)
    assert gap == 2
    assert at > 10**6
    assert trial_division_is_prime(at) and trial_division_is_prime(at + 2)


def test_prime_segment_validation():
    with pytest.raises(SieveRangeError):
        PrimeSegment(5, 4, np.array([], dtype=bool))
    with pytest.raises(SieveRangeError):
        PrimeSegment(2, 4, np.ones(5, dtype=bool))
