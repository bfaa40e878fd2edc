"""Trip traces: the CSV schema, parsing, writing and a synthetic generator.

A trace file is UTF-8 CSV with LF line endings and the header
``vehicle_id,depart_s,duration_s``.  Times are decimal seconds relative to the
trace origin.  Only departure time and trip duration are needed to drive the
acquisition policies, so richer mobility formats are reduced to these columns.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from .errors import EmptyTrace, MalformedRow, UnsortedInput
from .policy import TripRecord

HEADER = ("vehicle_id", "depart_s", "duration_s")


@dataclass(frozen=True)
class TraceStats:
    count: int
    mean_duration: float
    min_duration: float
    max_duration: float


def _ms(text: str) -> int:
    value = Decimal(text.strip())
    if not value.is_finite():
        raise InvalidOperation
    return int((value * 1000).to_integral_value())


def _seconds(ms: int) -> str:
    sign = "-" if ms < 0 else ""
    q, r = divmod(abs(ms), 1000)
    return f"{sign}{q}.{r:03d}"


def read_trace(lines: Iterable[str], *, sort: bool = False, offset_ms: int = 0) -> List[TripRecord]:
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HEADER:
        raise MalformedRow(1, f"expected header {','.join(HEADER)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise MalformedRow(lineno, f"expected 3 fields, got {len(row)}")
        vid = row[0].strip()
        if not vid:
            raise MalformedRow(lineno, "empty vehicle_id")
        try:
            depart, duration = _ms(row[1]), _ms(row[2])
        except (InvalidOperation, ValueError):
            raise MalformedRow(lineno, f"non-numeric time in {row!r}") from None
        if duration <= 0:
            raise MalformedRow(lineno, f"duration must be positive, got {row[2].strip()}")
        if not sort and records and depart < records[-1].depart - offset_ms:
            raise UnsortedInput(f"line {lineno}: departure {row[1].strip()} before previous row")
        records.append(TripRecord(vid, depart + offset_ms, duration))
    if sort:
        records.sort(key=lambda r: r.depart)
    return records


def parse_trace(path, *, sort: bool = False, offset_ms: int = 0) -> List[TripRecord]:
    """Trips from ``path`` in departure order; ``offset_ms`` shifts the trace origin."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_trace(fh, sort=sort, offset_ms=offset_ms)


def format_trace(records: Sequence[TripRecord], offset_ms: int = 0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow((r.vehicle_id, _seconds(r.depart - offset_ms), _seconds(r.duration)))
    return buf.getvalue()


def write_trace(records: Sequence[TripRecord], path, offset_ms: int = 0) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_trace(records, offset_ms))
    return path


def synth_trips(n_trips: int, window_s: float, mean_duration_s: float, seed: int, *,
                sigma: float = 0.6, bimodal: bool = False) -> List[TripRecord]:
    """Synthetic trips: uniform (or two-peak rush-hour) departures, log-normal durations.

    The log-normal location is chosen so that the distribution mean equals
    ``mean_duration_s``.
    """
    if n_trips <= 0:
        raise ValueError("n_trips must be positive")
    if window_s <= 0 or mean_duration_s <= 0:
        raise ValueError("window and mean duration must be positive")
    rng = np.random.default_rng(seed)
    window_ms = int(round(window_s * 1000))
    if bimodal:
        peaks = rng.choice([0.3, 0.7], size=n_trips) * window_ms
        departs = rng.normal(peaks, window_ms * 0.1)
        departs = np.clip(departs, 0, window_ms - 1)
    else:
        departs = rng.uniform(0, window_ms, size=n_trips)
    mu = math.log(mean_duration_s) - sigma ** 2 / 2
    durations = rng.lognormal(mu, sigma, size=n_trips) * 1000
    departs = np.floor(departs).astype(np.int64)
    durations = np.maximum(np.rint(durations).astype(np.int64), 1)
    order = np.argsort(departs, kind="stable")
    width = len(str(n_trips - 1))
    return [
        TripRecord(f"veh{int(i):0{width}d}", int(departs[i]), int(durations[i]))
        for i in order
    ]


def synth_trace(n_trips: int, window_s: float, mean_duration_s: float, seed: int, out,
                **kw) -> Path:
    return write_trace(synth_trips(n_trips, window_s, mean_duration_s, seed, **kw), out)


def trace_stats(records: Sequence[TripRecord]) -> TraceStats:
    if not records:
        raise EmptyTrace("trace holds no trips")
    durations = [r.duration for r in records]
    return TraceStats(
        count=len(durations),
        mean_duration=sum(durations) / len(durations) / 1000.0,
        min_duration=min(durations) / 1000.0,
        max_duration=max(durations) / 1000.0,
    )
