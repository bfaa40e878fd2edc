"""Latency records and the aggregate statistics reported per run."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, List, NamedTuple, Sequence

from .errors import EmptyInput
from .policy import MINUTE_MS

OK = "ok"


@dataclass(frozen=True)
class LatencyRecord:
    vehicle_id: str
    trigger: int
    e2e_ms: float
    policy: str
    n_pseudonyms: int
    outcome: str = OK

    @property
    def ok(self) -> bool:
        return self.outcome == OK


@dataclass(frozen=True)
class StatsSummary:
    max_ms: float
    min_ms: float
    avg_ms: float
    std_dev_ms: float
    variance: float
    p99_ms: float
    count: int

    def as_dict(self) -> dict:
        return asdict(self)


class MinuteBucket(NamedTuple):
    minute: int
    mean_ms: float
    count: int


def nearest_rank(sorted_values: Sequence[float], pct: int) -> float:
    """Smallest value whose empirical CDF reaches ``pct`` percent."""
    n = len(sorted_values)
    rank = -(-pct * n // 100)
    return sorted_values[max(rank, 1) - 1]


def summarize(values: Iterable[float]) -> StatsSummary:
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        raise EmptyInput("no successful acquisitions to summarize")
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1) if n > 1 else 0.0
    return StatsSummary(
        max_ms=xs[-1],
        min_ms=xs[0],
        avg_ms=mean,
        std_dev_ms=math.sqrt(var),
        variance=var,
        p99_ms=nearest_rank(xs, 99),
        count=n,
    )


def summary_stats(records: Iterable[LatencyRecord]) -> StatsSummary:
    """Table-style statistics over the successful records."""
    return summarize(r.e2e_ms for r in records if r.ok)


def per_minute_series(records: Iterable[LatencyRecord], origin: int = 0) -> List[MinuteBucket]:
    """Mean latency of completed acquisitions per minute of simulated trigger time."""
    buckets = defaultdict(list)
    for r in records:
        if r.ok:
            buckets[(r.trigger - origin) // MINUTE_MS].append(r.e2e_ms)
    return [MinuteBucket(m, math.fsum(v) / len(v), len(v)) for m, v in sorted(buckets.items())]
