"""Sieve machinery for locating two primes in short windows.

Submodules: primes (segmented sieve, progression sums), tuples (admissible
offset tuples), singular (density constants), weights (truncated divisor
sums), moments (moment sums, detector, threshold algebra), bv (distribution
level probe), cli (command line).
"""

from .bv import BvDeviationTable, GridSpec, bv_deviation, supported_theta
from .moments import (
    DetectorReport,
    MomentReport,
    SieveParams,
    ThresholdReport,
    double_sum_T,
    double_sum_exact_counts,
    gap_bound,
    two_primes_detector,
    pure_moment,
    threshold,
    twisted_moment,
)
from .primes import (
    PrimeSegment,
    ThetaStarQuery,
    chebyshev_theta,
    min_gap_in,
    primes_in,
    sieve_segment,
    theta_star,
    varpi,
)
from .singular import SingularSeriesValue, gallagher_average, singular_series
from .tuples import (
    SEPTUPLE_OFFSETS,
    TWIN_OFFSETS,
    UNCHANGED,
    OffsetTuple,
    enumerate_tuples,
    extend,
    is_admissible,
    member_of_omega,
    omega_profile,
)
from .weights import WeightBlock, WeightParams, lambda_block, lambda_bruteforce, lambda_weight

__version__ = "0.1.0"

__all__ = [
    "BvDeviationTable",
    "DetectorReport",
    "GridSpec",
    "MomentReport",
    "OffsetTuple",
    "PrimeSegment",
    "SEPTUPLE_OFFSETS",
    "SieveParams",
    "SingularSeriesValue",
    "ThetaStarQuery",
    "ThresholdReport",
    "TWIN_OFFSETS",
    "UNCHANGED",
    "WeightBlock",
    "WeightParams",
    "bv_deviation",
    "chebyshev_theta",
    "double_sum_T",
    "double_sum_exact_counts",
    "enumerate_tuples",
    "extend",
    "gallagher_average",
    "gap_bound",
    "two_primes_detector",
    "is_admissible",
    "lambda_block",
    "lambda_bruteforce",
    "lambda_weight",
    "member_of_omega",
    "min_gap_in",
    "omega_profile",
    "primes_in",
    "pure_moment",
    "sieve_segment",
    "singular_series",
    "supported_theta",
    "theta_star",
    "threshold",
    "twisted_moment",
    "varpi",
]
