"""Request windows, acquisition schedules and pseudonym lifetime slicing.

Three acquisition policies are supported:

* ``P1`` (user-controlled): one request at departure covering the whole trip.
* ``P2`` (oblivious): a request every ``gamma`` ms, each for ``gamma`` ms.
* ``P3`` (universally fixed): requests for the current cell of a global grid of
  ``gamma``-long cells anchored at ``t_date``; pseudonym lifetimes lie on the
  global ``tau_p`` grid so every vehicle switches pseudonyms at the same instants.

Everything here is pure integer arithmetic on millisecond timestamps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

from .errors import NoUsefulSlices

MS = 1000
MINUTE_MS = 60 * MS
DAY_MS = 24 * 60 * MINUTE_MS

Window = Tuple[int, int]


class PolicyKind(enum.IntEnum):
    P1 = 1
    P2 = 2
    P3 = 3

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown policy {text!r}; expected p1, p2 or p3") from None

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    tau_p: int
    gamma: int = 0
    t_date: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.tau_p <= 0:
            raise ValueError("tau_p must be positive")
        if self.kind in (PolicyKind.P2, PolicyKind.P3) and self.gamma <= 0:
            raise ValueError(f"{self.kind.name} needs a positive gamma")
        if self.kind is PolicyKind.P3 and self.gamma % self.tau_p:
            raise ValueError("P3 pseudonym lifetime must divide gamma")


@dataclass(frozen=True)
class TripRecord:
    vehicle_id: str
    depart: int
    duration: int
    #: Duration the driver announced for P1; ``None`` means the estimate is exact.
    estimated_duration: Optional[int] = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("trip duration must be positive")
        if self.estimated_duration is not None and self.estimated_duration <= 0:
            raise ValueError("estimated duration must be positive")

    @property
    def end(self) -> int:
        return self.depart + self.duration


class ScheduleEntry(NamedTuple):
    trigger: int
    t_s: int
    t_e: int

    @property
    def window(self) -> Window:
        return (self.t_s, self.t_e)


def midnight(t: int) -> int:
    """Start of the UTC day containing ``t``."""
    return t - t % DAY_MS


def _cell_index(cfg: PolicyConfig, t: int) -> int:
    return (t - cfg.t_date) // cfg.gamma


def grid_cell(cfg: PolicyConfig, t: int) -> Window:
    i = _cell_index(cfg, t)
    return (cfg.t_date + i * cfg.gamma, cfg.t_date + (i + 1) * cfg.gamma)


def is_grid_cell(cfg: PolicyConfig, window: Window) -> bool:
    t_s, t_e = window
    return (t_s - cfg.t_date) % cfg.gamma == 0 and t_e - t_s == cfg.gamma


def request_window(cfg: PolicyConfig, now: int, trip: TripRecord) -> Window:
    if not trip.depart <= now < trip.end:
        raise ValueError(f"now={now} lies outside the trip [{trip.depart}, {trip.end})")
    if cfg.kind is PolicyKind.P1:
        return (trip.depart, trip.end)
    if cfg.kind is PolicyKind.P2:
        return (now, now + cfg.gamma)
    return grid_cell(cfg, now)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def interactions_count(cfg: PolicyConfig, trip: TripRecord) -> int:
    if cfg.kind is PolicyKind.P1:
        return 1
    if cfg.kind is PolicyKind.P2:
        return _ceil_div(trip.duration, cfg.gamma)
    first = _cell_index(cfg, trip.depart)
    last = _cell_index(cfg, trip.end - 1)
    return last - first + 1


def compute_schedule(cfg: PolicyConfig, trip: TripRecord) -> List[ScheduleEntry]:
    if cfg.kind is PolicyKind.P1:
        return [ScheduleEntry(trip.depart, trip.depart, trip.end)]
    if cfg.kind is PolicyKind.P2:
        return [
            ScheduleEntry(t, t, t + cfg.gamma)
            for t in range(trip.depart, trip.end, cfg.gamma)
        ]
    t_s, t_e = grid_cell(cfg, trip.depart)
    entries = [ScheduleEntry(trip.depart, t_s, t_e)]
    while t_e < trip.end:
        entries.append(ScheduleEntry(t_e, t_e, t_e + cfg.gamma))
        t_e += cfg.gamma
    return entries


def slice_lifetimes(cfg: PolicyConfig, window: Window, now: int) -> List[Window]:
    """Consecutive, non-overlapping pseudonym lifetimes covering ``window``.

    P1/P2 slices start at the window start and the last one is cut at the
    window end.  P3 slices sit on the ``tau_p`` grid anchored at ``t_date`` and
    those already over at ``now`` are dropped.
    """
    t_s, t_e = window
    if t_s >= t_e:
        raise ValueError(f"empty window [{t_s}, {t_e})")
    tau = cfg.tau_p
    if cfg.kind is PolicyKind.P3:
        start = cfg.t_date + ((t_s - cfg.t_date) // tau) * tau
        out = [(b, min(b + tau, t_e)) for b in range(start, t_e, tau)]
        out = [(max(a, t_s), b) for a, b in out if b > now]
    else:
        out = [(b, min(b + tau, t_e)) for b in range(t_s, t_e, tau)]
    if not out:
        raise NoUsefulSlices(f"every slice of [{t_s}, {t_e}) expired by {now}")
    return out


def max_slices(cfg: PolicyConfig, schedule: List[ScheduleEntry]) -> int:
    """Upper bound on the keys a vehicle needs for ``schedule`` (nothing expired)."""
    return sum(_ceil_div(e.t_e - e.t_s, cfg.tau_p) for e in schedule)
