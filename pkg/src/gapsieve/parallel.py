"""Deterministic block partitioning and worker-count-invariant map/reduce.

The contract every caller relies on: the partition of a range depends only on
(lo, hi, block size), results are gathered in task order, and reductions walk
a balanced pairwise tree over that fixed order.  Worker count changes
scheduling, never arithmetic, so outputs are bit-identical for 1 or 16
workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

WORKERS_ENV = "GAPSIEVE_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument wins, then the environment variable, then 1."""
    if workers is not None:
        if workers < 1:
            raise ValueError(f"worker count must be >= 1, got {workers}")
        return workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {env}")
        return n
    return 1


def block_spans(lo: int, hi: int, size: int) -> list[tuple[int, int]]:
    """Split [lo, hi) into consecutive [s, e) blocks of at most `size`."""
    if lo >= hi:
        raise ValueError(f"empty range [{lo}, {hi})")
    if size < 1:
        raise ValueError("block size must be positive")
    spans = []
    s = lo
    while s < hi:
        e = min(s + size, hi)
        spans.append((s, e))
        s = e
    return spans


def ordered_map(fn: Callable[[T], R], tasks: Sequence[T], workers: int | None = None) -> list[R]:
    """Map fn over tasks, results in task order regardless of scheduling."""
    nworkers = resolve_workers(workers)
    tasks = list(tasks)
    if nworkers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(nworkers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def tree_fold(values: Sequence[R], combine: Callable[[R, R], R]) -> R:
    """Pairwise fold in index order; the tree shape depends only on len(values)."""
    items = list(values)
    if not items:
        raise ValueError("cannot fold an empty sequence")
    while len(items) > 1:
        nxt = []
        for i in range(0, len(items) - 1, 2):
            nxt.append(combine(items[i], items[i + 1]))
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]
