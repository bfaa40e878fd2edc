"""Clocks for the services and the replay harness.

Servers and vehicles read time through a clock object so that a trace can be
replayed at a compressed pace: ``CompressedClock`` advances simulated time
``factor`` times faster than the wall clock.  Wall time comes from
``time.time`` so separate processes configured with the same origins agree.
"""

from __future__ import annotations

import asyncio
import time


class SystemClock:
    factor = 1.0

    def now(self) -> int:
        return int(time.time() * 1000)

    async def sleep_until(self, t: int) -> None:
        delay = (t - self.now()) / 1000.0
        if delay > 0:
            await asyncio.sleep(delay)


class CompressedClock:
    def __init__(self, sim_origin: int, factor: float, wall_origin: float | None = None):
        if factor <= 0:
            raise ValueError("compression factor must be positive")
        self.sim_origin = sim_origin
        self.factor = factor
        self.wall_origin = time.time() if wall_origin is None else wall_origin

    def now(self) -> int:
        return self.sim_origin + int((time.time() - self.wall_origin) * 1000 * self.factor)

    def wall_delay(self, t: int) -> float:
        """Seconds of wall time until simulated instant ``t``."""
        return (t - self.now()) / 1000.0 / self.factor

    async def sleep_until(self, t: int) -> None:
        delay = self.wall_delay(t)
        if delay > 0:
            await asyncio.sleep(delay)

    def describe(self) -> dict:
        return {"kind": "compressed", "sim_origin_ms": self.sim_origin,
                "factor": self.factor, "wall_origin": self.wall_origin}


class TriggerClock:
    """Protocol time for one acquisition: its trigger instant plus uncompressed wall time since then.

    Compression fast-forwards the idle time between triggers; once an
    acquisition fires it runs at real-time pace, so a 40 ms exchange stamps
    its messages 40 ms after the trigger rather than 40 ms times the factor.
    """

    def __init__(self, base: CompressedClock, trigger: int):
        self.base = base
        self.trigger = trigger
        self.wall_trigger = base.wall_origin + (trigger - base.sim_origin) / 1000.0 / base.factor

    def now(self) -> int:
        return self.trigger + max(0, int((time.time() - self.wall_trigger) * 1000))

    async def sleep_until(self, t: int) -> None:
        await self.base.sleep_until(t)


class ManualClock:
    """Time only moves when told to; ``sleep_until`` jumps straight there."""

    factor = 1.0

    def __init__(self, t: int = 0):
        self.t = t

    def now(self) -> int:
        return self.t

    def set(self, t: int) -> None:
        self.t = t

    def advance(self, dt: int) -> None:
        self.t += dt

    async def sleep_until(self, t: int) -> None:
        if t > self.t:
            self.t = t


def clock_from_config(spec: dict | None):
    if not spec or spec.get("kind", "system") == "system":
        return SystemClock()
    if spec["kind"] == "compressed":
        return CompressedClock(int(spec["sim_origin_ms"]), float(spec["factor"]), float(spec["wall_origin"]))
    raise ValueError(f"unknown clock kind {spec['kind']!r}")
