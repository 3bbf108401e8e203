"""Empirical probe of the level-of-distribution hypothesis.

For moduli q up to x^theta and a geometric grid of dyadic points y, measure

    dev(q) = max over grid y, max over coprime a of |theta*(y; a, q) - y/phi(q)|

where theta*(y; a, q) sums log p over primes p in (y, 2y] with p = a (mod q),
and report the per-q worst rows plus their total.  One shared prime pass per
grid point feeds every modulus: the primes of (y, 2y] are materialized once
and bucketed per q by residue.

The exact maximum over all y <= x is infeasible and the dyadic sums change
slowly, so the grid {x, x/2, x/4, ...} (integer halving, down to y_min)
stands in for it; the grid is part of the output so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, TrendError
from .parallel import ordered_map, resolve_workers
from .primes import primes_in

MODULUS_BUDGET = 100_000


@dataclass(frozen=True)
class GridSpec:
    """Geometric y-grid: x, x//factor, x//factor^2, ..., down to y_min."""

    factor: int = 2
    y_min: int = 100

    def points(self, x: int) -> list[int]:
        if self.factor < 2:
            raise ValueError("grid factor must be >= 2")
        if self.y_min < 2:
            raise ValueError("y_min must be >= 2")
        ys = []
        y = x
        while y >= self.y_min:
            ys.append(y)
            y //= self.factor
        return ys


def rational_power_floor(x: int, theta: Fraction) -> int:
    """floor(x^theta) for rational theta in (0, 1), exact integer arithmetic."""
    num, den = theta.numerator, theta.denominator
    target = x**num
    q = int(round(x ** (num / den)))  # float seed, then exact adjustment
    while q > 1 and q**den > target:
        q -= 1
    while (q + 1) ** den <= target:
        q += 1
    return q


def totients_upto(q_max: int) -> np.ndarray:
    """Euler phi for 0..q_max by the standard multiplicative sieve."""
    phi = np.arange(q_max + 1, dtype=np.int64)
    for p in range(2, q_max + 1):
        if phi[p] == p:  # untouched -> prime
            phi[p::p] -= phi[p::p] // p
    return phi


@dataclass(frozen=True)
class DeviationRow:
    q: int
    worst_a: int
    worst_y: int
    deviation: float


@dataclass(frozen=True)
class BvDeviationTable:
    x: int
    theta: Fraction
    y_grid: tuple[int, ...]
    rows: tuple[DeviationRow, ...]
    total: float

    def doc(self) -> dict:
        return {
            "kind": "bv",
            "x": self.x,
            "theta": str(self.theta),
            "y_grid": list(self.y_grid),
            "rows": [
                {"q": r.q, "worst_a": r.worst_a, "worst_y": r.worst_y, "deviation": r.deviation}
                for r in self.rows
            ],
            "total": self.total,
        }


def _grid_point_devs(args) -> tuple[np.ndarray, np.ndarray]:
    """Per-q (deviation, worst a) for one grid point y, all q at once."""
    y, q_max = args
    phi = totients_upto(q_max)
    ps = primes_in(y + 1, 2 * y + 1)
    logs = np.log(ps.astype(np.float64))
    total = math.fsum(logs)

    devs = np.zeros(q_max + 1)
    best_a = np.zeros(q_max + 1, dtype=np.int64)
    devs[1] = abs(total - y)  # q = 1: single class, exactly the fsum total
    for q in range(2, q_max + 1):
        buckets = np.bincount(ps % q, weights=logs, minlength=q)[:q]
        expected = y / phi[q]
        cls = np.abs(buckets - expected)
        cls[np.gcd(np.arange(q), q) != 1] = -1.0  # only coprime classes compete
        a = int(np.argmax(cls))
        devs[q] = cls[a]
        best_a[q] = a
    return devs, best_a


def bv_deviation(
    x: int,
    theta: Fraction | str | int,
    grid: GridSpec = GridSpec(),
    workers: int | None = None,
    modulus_budget: int = MODULUS_BUDGET,
) -> BvDeviationTable:
    """Worst progression deviations for all moduli q <= floor(x^theta)."""
    if x < 10**3:
        raise ValueError(f"need x >= 1000, got {x}")
    th = Fraction(theta)
    if not (0 < th < 1):
        raise ValueError(f"theta must lie in (0, 1), got {th}")
    ys = grid.points(x)
    if len(ys) < 4:
        raise ValueError(f"grid has {len(ys)} points, need >= 4; lower y_min")
    q_max = rational_power_floor(x, th)
    if q_max > modulus_budget:
        raise BudgetError(f"x^theta = {q_max} exceeds modulus budget {modulus_budget}")
    resolve_workers(workers)

    per_y = ordered_map(_grid_point_devs, [(y, q_max) for y in ys], workers)

    rows = []
    for q in range(1, q_max + 1):
        worst = -1.0
        wa = 0
        wy = 0
        for y, (devs, best_a) in zip(ys, per_y):  # grid order: largest y first
            if devs[q] > worst:
                worst = float(devs[q])
                wa = int(best_a[q])
                wy = y
        rows.append(DeviationRow(q, wa if q > 1 else 0, wy, worst))
    total = math.fsum(r.deviation for r in rows)
    return BvDeviationTable(x, th, tuple(ys), tuple(rows), total)


@dataclass(frozen=True)
class ThetaSupportReport:
    A: float
    groups: tuple[dict, ...]

    def doc(self) -> dict:
        return {"kind": "theta_support", "A": self.A, "groups": list(self.groups)}


# interpretive labels only: what a sustained level would yield, not a verdict
_MILESTONES = (
    (Fraction(1, 2), "level above 1/2 would force infinitely many bounded gaps p_{n+1} - p_n <= c(theta)"),
    (Fraction(20, 21), "level above 20/21 would force two primes in admissible 7-tuples, so gaps <= 20 infinitely often"),
)


def supported_theta(tables: list[BvDeviationTable], A: float) -> ThetaSupportReport:
    """For each theta present, check total <= x/(log x)^A at every x.

    Needs at least two tables per theta at strictly increasing x -- a single
    point cannot exhibit the required decay.
    """
    if A <= 0:
        raise ValueError(f"need A > 0, got {A}")
    by_theta: dict[Fraction, list[BvDeviationTable]] = {}
    for t in tables:
        by_theta.setdefault(t.theta, []).append(t)
    groups = []
    for th in sorted(by_theta):
        group = by_theta[th]
        xs = [t.x for t in group]
        if len(group) < 2:
            raise TrendError(f"theta={th}: need >= 2 tables at increasing x, got {len(group)}")
        if sorted(xs) != xs or len(set(xs)) != len(xs):
            raise TrendError(f"theta={th}: x values must be strictly increasing, got {xs}")
        runs = []
        for t in group:
            bound = t.x / math.log(t.x) ** A
            runs.append({"x": t.x, "total": t.total, "bound": bound, "holds": t.total <= bound})
        milestones = [label for cut, label in _MILESTONES if th > cut]
        groups.append(
            {
                "theta": str(th),
                "runs": runs,
                "all_hold": all(r["holds"] for r in runs),
                "ratio_decreasing": all(
                    group[i].total / group[i].x > group[i + 1].total / group[i + 1].x
                    for i in range(len(group) - 1)
                ),
                "milestones": milestones,
            }
        )
    return ThetaSupportReport(A, tuple(groups))
