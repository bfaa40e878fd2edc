import asyncio
import time

from vpki.clock import CompressedClock, ManualClock, TriggerClock, clock_from_config


def test_compressed_clock_rate():
    c = CompressedClock(1_000_000, 60.0, wall_origin=time.time() - 2.0)
    assert abs(c.now() - (1_000_000 + 120_000)) < 1_000
    assert abs(c.wall_delay(c.now() + 60_000) - 1.0) < 0.05


def test_trigger_clock_runs_at_wall_pace():
    base = CompressedClock(0, 60.0, wall_origin=time.time() - 10.0)
    trigger = 600_000 - 30_000  # half a wall second ago
    t = TriggerClock(base, trigger)
    assert 400 <= t.now() - trigger <= 1_000
    # the compressed clock is 30 simulated seconds past the trigger already
    assert base.now() - trigger >= 29_000


def test_trigger_clock_never_precedes_trigger():
    base = CompressedClock(0, 60.0)
    t = TriggerClock(base, 3_600_000)
    assert t.now() == 3_600_000


def test_manual_clock_jumps():
    c = ManualClock(5)
    asyncio.run(c.sleep_until(50))
    assert c.now() == 50
    asyncio.run(c.sleep_until(10))
    assert c.now() == 50


def test_clock_from_config():
    c = clock_from_config({"kind": "compressed", "sim_origin_ms": 7, "factor": 2.0, "wall_origin": 0.0})
    assert isinstance(c, CompressedClock) and c.factor == 2.0
    assert abs(clock_from_config(None).now() - time.time() * 1000) < 1_000
