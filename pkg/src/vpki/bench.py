"""Trace replay harness: drive vehicles through a policy and measure acquisition latency.

Two modes:

``realtime``
    LTCA and PCA run as separate server processes behind TLS.  Every trip is an
    asyncio task in this process that sleeps until its departure on a
    :class:`~vpki.clock.CompressedClock` and then follows its schedule.
    Simulated time runs ``compression`` times faster than the wall clock;
    latencies are wall-clock and never scaled.  With ``protocol_clock =
    "trigger"`` (the default) an acquisition stamps its messages with
    :class:`~vpki.clock.TriggerClock`, so only the gaps between triggers are
    compressed.

``virtual``
    Both authorities run in-process behind :class:`~vpki.transport.LocalTransport`
    and simulated time jumps from one trigger to the next in global order.
    Latencies are still wall-clock, but without TLS or sockets.  Used for the
    counting and alignment audits, which do not depend on timing.

Outputs (``out``): records.csv, series.csv, summary.json, config.json and
audit.json, plus the deployment directory when servers were launched.
"""

from __future__ import annotations

import asyncio
import csv
import logging
import os
import platform
import shutil
import sys
import time
from collections import Counter
from contextlib import asynccontextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import crypto
from .clock import ManualClock, TriggerClock, clock_from_config
from .codec import encode
from .deploy import (
    LTCA_ID,
    PCA_ID,
    ServerProcess,
    create_deployment,
    dump_json,
    load_client,
    load_json,
    load_ltca,
    load_pca,
    set_clock,
)
from .errors import BenchAborted, TransportError
from .ltca import Ltca, LtcaConfig
from .model import ConfigRequest, RegisterRequest, subject_id_from_name
from .obu import VehicleContext
from .pca import Pca, PcaConfig
from .policy import (
    PolicyConfig,
    PolicyKind,
    ScheduleEntry,
    TripRecord,
    interactions_count,
    request_window,
)
from .stats import LatencyRecord, MinuteBucket, StatsSummary, per_minute_series, summary_stats
from .trace import parse_trace
from .transport import LocalTransport, TcpTransport, call_once

log = logging.getLogger(__name__)

#: 2016-07-05 00:00 UTC; any midnight works, this one just looks like a date.
DEFAULT_T_DATE = 1_467_676_800_000
RECORD_HEADER = ("vehicle_id", "trigger_ms", "e2e_ms", "policy", "n_pseudonyms", "outcome")
SERIES_HEADER = ("minute", "mean_ms", "count")
LOG_ENV = "VPKI_BENCH_LOG"


def configure_logging() -> None:
    level = os.environ.get(LOG_ENV)
    if level:
        logging.basicConfig(level=level.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s")


@dataclass
class BenchConfig:
    trace: Optional[str] = None
    policy: str = "p3"
    gamma_s: float = 300.0
    tau_s: float = 30.0
    compression: float = 60.0
    mode: str = "realtime"
    launch_servers: bool = True
    deployment: Optional[str] = None
    ltca: Optional[str] = None
    pca: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    t_date_ms: int = DEFAULT_T_DATE
    origin_offset_s: float = 6 * 3600.0
    sort_trace: bool = False
    concurrency: int = 256
    connections: str = "per-acquisition"
    abort_error_rate: Optional[float] = None
    abort_min_records: int = 200
    outage_s: Optional[Tuple[float, float]] = None
    p1_estimate_jitter: float = 0.0
    skew_s: float = 60.0
    grace_s: float = 60.0
    lead_s: float = 3.0
    saturation_probe: int = 0
    timeout_s: float = 120.0
    protocol_clock: str = "trigger"

    def __post_init__(self):
        if self.mode not in ("realtime", "virtual"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.connections not in ("per-acquisition", "pooled"):
            raise ValueError(f"unknown connection mode {self.connections!r}")
        if self.protocol_clock not in ("trigger", "compressed"):
            raise ValueError(f"unknown protocol clock {self.protocol_clock!r}")
        if self.compression <= 0:
            raise ValueError("compression must be positive")
        if self.outage_s is not None:
            self.outage_s = tuple(self.outage_s)

    @property
    def kind(self) -> PolicyKind:
        return PolicyKind.parse(self.policy)

    @property
    def origin_ms(self) -> int:
        return self.t_date_ms + int(round(self.origin_offset_s * 1000))

    def policy_config(self) -> PolicyConfig:
        kind = self.kind
        gamma = int(round(self.gamma_s * 1000)) if kind is not PolicyKind.P1 else 0
        return PolicyConfig(kind, int(round(self.tau_s * 1000)), gamma, self.t_date_ms)

    @property
    def tolerance_scale(self) -> float:
        """Freshness and grace windows are stretched by the compression factor in realtime mode."""
        return self.compression if self.mode == "realtime" else 1.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchResult:
    records: List[LatencyRecord]
    summary: Optional[StatsSummary]
    series: List[MinuteBucket]
    audit: dict
    out: Optional[Path] = None
    contexts: List[Tuple[TripRecord, VehicleContext]] = field(default_factory=list, repr=False)


# -- fault injection -------------------------------------------------------------------

class OutageTransport:
    """Refuse connections while simulated time is inside ``[start, end)``."""

    def __init__(self, inner, clock, start: int, end: int):
        self.inner = inner
        self.clock = clock
        self.start = start
        self.end = end

    @asynccontextmanager
    async def connect(self):
        if self.start <= self.clock.now() < self.end:
            exc = ConnectionRefusedError("injected outage")
            err = TransportError(f"ConnectionRefusedError: {exc}")
            err.code = "transport:ConnectionRefusedError"
            raise err
        async with self.inner.connect() as conn:
            yield conn


class PooledTransport:
    """Reuse open connections across acquisitions instead of one per acquisition."""

    def __init__(self, inner: TcpTransport):
        self.inner = inner
        self._idle: List[Tuple[object, object]] = []
        self._open: List[object] = []

    @asynccontextmanager
    async def connect(self):
        if self._idle:
            cm, conn = self._idle.pop()
        else:
            cm = self.inner.connect()
            conn = await cm.__aenter__()
            self._open.append(cm)
        try:
            yield conn
        except BaseException:
            self._open.remove(cm)
            await cm.__aexit__(None, None, None)
            raise
        self._idle.append((cm, conn))

    async def close(self) -> None:
        for cm in self._open:
            await cm.__aexit__(None, None, None)
        self._open.clear()
        self._idle.clear()


# -- trips and vehicles ------------------------------------------------------------------

def load_trips(config: BenchConfig, trips: Optional[Sequence[TripRecord]] = None) -> List[TripRecord]:
    if trips is None:
        if config.trace is None:
            raise ValueError("no trace given")
        trips = parse_trace(config.trace, sort=config.sort_trace, offset_ms=config.origin_ms)
    trips = list(trips)
    if config.kind is PolicyKind.P1 and config.p1_estimate_jitter > 0:
        rng = np.random.default_rng(config.seed)
        j = config.p1_estimate_jitter
        factors = rng.uniform(1 - j, 1 + j, size=len(trips))
        trips = [TripRecord(t.vehicle_id, t.depart, t.duration, max(1, int(round(t.duration * f))))
                 for t, f in zip(trips, factors)]
    return trips


def subject_for(trip: TripRecord, index: int) -> bytes:
    # one context per trip; the index keeps trips that share a vehicle id apart
    return subject_id_from_name(f"{trip.vehicle_id}#{index}")


def build_contexts(trips: Sequence[TripRecord], ltcs, keypairs, pca_info, ltca_public_key: bytes,
                   skew_ms: int) -> List[Tuple[TripRecord, VehicleContext]]:
    out = []
    for trip, ltc, kp in zip(trips, ltcs, keypairs):
        ctx = VehicleContext(trip.vehicle_id, ltc, kp, pca_info, ltca_public_key, skew_ms=skew_ms)
        ctx.fill_pool(ctx.pool_size_for(trip))
        out.append((trip, ctx))
    return out


class Sink:
    """Append-only record collector with an optional error-rate abort."""

    def __init__(self, abort_rate: Optional[float] = None, min_records: int = 200):
        self.records: List[LatencyRecord] = []
        self.completed_wall: List[float] = []
        self.errors = 0
        self.abort_rate = abort_rate
        self.min_records = min_records
        self.aborted = asyncio.Event() if abort_rate is not None else None

    def add(self, rec: LatencyRecord) -> None:
        self.records.append(rec)
        self.completed_wall.append(time.monotonic())
        if not rec.ok:
            self.errors += 1
            log.debug("acquisition failed: %s %s", rec.vehicle_id, rec.outcome)
        if self.aborted is not None and len(self.records) >= self.min_records \
                and self.errors / len(self.records) > self.abort_rate:
            self.aborted.set()


# -- audits ----------------------------------------------------------------------------

def _coverage_gap(trip: TripRecord, lifetimes: List[Tuple[int, int]]) -> int:
    cursor, gap = trip.depart, 0
    for s, e in lifetimes:
        if cursor >= trip.end:
            break
        if e <= cursor:
            continue
        if s > cursor:
            gap += min(s, trip.end) - cursor
        cursor = max(cursor, e)
    if cursor < trip.end:
        gap += trip.end - cursor
    return gap


def audit_run(policy: PolicyConfig, contexts: Sequence[Tuple[TripRecord, VehicleContext]],
              records: Sequence[LatencyRecord], *, factor: float = 1.0) -> dict:
    """Timeline, alignment and conservation checks over a finished run."""
    overlaps = gap_trips = gap_ms = count_mismatch = residual = 0
    residues: Counter = Counter()
    expected = 0
    sojourn = []
    for trip, ctx in contexts:
        lifetimes = sorted((p.t_s, p.t_e) for p, _ in ctx.store)
        overlaps += sum(1 for a, b in zip(lifetimes, lifetimes[1:]) if b[0] < a[1])
        gap = _coverage_gap(trip, lifetimes)
        if gap:
            gap_trips += 1
            gap_ms += gap
        for s, e in lifetimes:
            residues[(s - policy.t_date) % policy.tau_p] += 1
            residues[(e - policy.t_date) % policy.tau_p] += 1
        n_res = sum(1 for ev in ctx.history if ev.residual)
        residual += n_res
        laws = interactions_count(policy, trip) + n_res
        expected += laws
        if len(ctx.history) != laws:
            count_mismatch += 1
        sojourn.extend((ev.completed - ev.trigger) / factor for ev in ctx.history if ev.completed is not None)
    outcomes = Counter(r.outcome for r in records)
    n = len(records)
    sojourn.sort()
    return {
        "trips": len(contexts),
        "records": n,
        "expected_records": expected,
        "p1_residual_requests": residual,
        "trips_with_count_mismatch": count_mismatch,
        "outcomes": dict(sorted(outcomes.items())),
        "error_rate": (n - outcomes.get("ok", 0)) / n if n else 0.0,
        "pseudonyms": sum(r.n_pseudonyms for r in records),
        "overlapping_pairs": overlaps,
        "trips_with_coverage_gap": gap_trips,
        "coverage_gap_ms": gap_ms,
        "boundary_residues_ms": sorted(residues)[:32],
        "boundary_residue_classes": len(residues),
        "max_trigger_to_completion_wall_ms": sojourn[-1] if sojourn else 0.0,
        "p99_trigger_to_completion_wall_ms": sojourn[max(-(-99 * len(sojourn) // 100), 1) - 1] if sojourn else 0.0,
    }


def _throughput(completed_wall: Sequence[float]) -> dict:
    if not completed_wall:
        return {"mean_per_s": 0.0, "peak_1s": 0}
    first, last = min(completed_wall), max(completed_wall)
    buckets = Counter(int(t - first) for t in completed_wall)
    span = max(last - first, 1e-9)
    return {"mean_per_s": len(completed_wall) / span, "peak_1s": max(buckets.values()),
            "span_s": span}


# -- export ----------------------------------------------------------------------------

def write_records(records: Sequence[LatencyRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow((r.vehicle_id, r.trigger, repr(float(r.e2e_ms)), r.policy, r.n_pseudonyms, r.outcome))
    return path


def read_records(path) -> List[LatencyRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_HEADER:
            raise ValueError(f"unexpected records header {header}")
        return [LatencyRecord(v, int(t), float(e), p, int(n), o) for v, t, e, p, n, o in reader]


def write_series(series: Sequence[MinuteBucket], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for b in series:
            w.writerow((b.minute, repr(float(b.mean_ms)), b.count))
    return path


def export(result: BenchResult, config: BenchConfig, out_dir, extra: Optional[dict] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(result.records, out / "records.csv")
    write_series(result.series, out / "series.csv")
    dump_json(result.summary.as_dict() if result.summary else None, out / "summary.json")
    echo = config.as_dict()
    echo["environment"] = {"python": sys.version.split()[0], "platform": platform.platform(),
                           "cpu_count": os.cpu_count()}
    echo.update(extra or {})
    dump_json(echo, out / "config.json")
    dump_json(result.audit, out / "audit.json")
    for _, ctx in result.contexts:
        if ctx.store:
            (out / "sample_pseudonym.hex").write_text(encode(ctx.store[0][0]).hex() + "\n")
            break
    return out


# -- virtual mode ----------------------------------------------------------------------

def _local_authorities(config: BenchConfig, clock):
    scale = config.tolerance_scale
    skew, grace = int(config.skew_s * 1000 * scale), int(config.grace_s * 1000 * scale)
    ltca = Ltca(LtcaConfig(LTCA_ID, skew_ms=skew, grace_ms=grace, ra_credential=b"ra"),
                crypto.generate_keypair())
    pcfg = config.policy_config()
    pca = Pca(PcaConfig(PCA_ID, {LTCA_ID: ltca.public_key}, tau_p=pcfg.tau_p,
                        gamma_p3=pcfg.gamma or int(config.gamma_s * 1000), t_date=config.t_date_ms,
                        policy=config.kind, skew_ms=skew, ra_credential=b"ra"),
              crypto.generate_keypair())
    return ltca, pca, skew


async def _run_virtual(config: BenchConfig, trips: List[TripRecord], sink: Sink):
    clock = ManualClock(config.t_date_ms)
    ltca, pca, skew = _local_authorities(config, clock)
    keypairs = [crypto.generate_keypair() for _ in trips]
    ltcs = [ltca.register_vehicle(subject_for(t, i), kp.public, config.t_date_ms)
            for i, (t, kp) in enumerate(zip(trips, keypairs))]
    contexts = build_contexts(trips, ltcs, keypairs, pca.get_config(), ltca.public_key, skew)
    lt: object = LocalTransport(ltca, clock)
    pt: object = LocalTransport(pca, clock)
    if config.outage_s:
        pt = OutageTransport(pt, clock, config.origin_ms + int(config.outage_s[0] * 1000),
                             config.origin_ms + int(config.outage_s[1] * 1000))
    events: List[Tuple[int, int, ScheduleEntry, bool]] = []
    for i, (trip, ctx) in enumerate(contexts):
        events.extend((entry.trigger, i, entry, residual) for entry, residual in ctx.plan(trip))
    events.sort(key=lambda e: (e[0], e[1]))
    for trigger, i, entry, residual in events:
        if sink.aborted is not None and sink.aborted.is_set():
            break
        clock.set(trigger)
        ctx = contexts[i][1]
        sink.add(await ctx.run_entry(entry, clock, lt, pt, residual=residual, continue_on_error=True))
    return contexts, {"ltca": ltca, "pca": pca, "clock": clock}


# -- realtime mode ---------------------------------------------------------------------

async def _register_remote(transport, trips, keypairs, admin: bytes):
    ltcs = []
    async with transport.connect() as conn:
        for i, (trip, kp) in enumerate(zip(trips, keypairs)):
            resp = await conn.call(RegisterRequest(subject_for(trip, i), kp.public, admin))
            ltcs.append(resp.ltc)
    return ltcs


def _provision_local(deploy_dir: Path, trips, keypairs, now: int):
    """Register vehicles straight into the LTCA database before the server starts."""
    spec = load_ltca(deploy_dir / "ltca.json")
    try:
        return [spec.service.register_vehicle(subject_for(t, i), kp.public, now)
                for i, (t, kp) in enumerate(zip(trips, keypairs))]
    finally:
        spec.service.store.close()


async def _saturation_probe(n: int, config: BenchConfig, clock, lt, pt, contexts_factory) -> dict:
    """Fire ``n`` single acquisitions at once and measure completion rate."""
    now = clock.now()
    pcfg = config.policy_config()
    probe_len = pcfg.gamma or int(config.gamma_s * 1000)
    trips = [TripRecord(f"probe{i}", now, probe_len) for i in range(n)]
    contexts = await contexts_factory(trips)
    sem = asyncio.Semaphore(config.concurrency)
    ok = 0
    pseudonyms = 0

    async def one(trip, ctx):
        nonlocal ok, pseudonyms
        window = request_window(ctx.policy, max(clock.now(), trip.depart), trip)
        entry = ScheduleEntry(clock.now(), *window)
        rec = await ctx.run_entry(entry, clock, lt, pt, continue_on_error=True, limiter=sem)
        if rec.ok:
            ok += 1
            pseudonyms += rec.n_pseudonyms

    start = time.perf_counter()
    await asyncio.gather(*(one(t, c) for t, c in contexts))
    wall = time.perf_counter() - start
    return {"acquisitions": n, "ok": ok, "wall_s": wall, "acquisitions_per_s": ok / wall,
            "pseudonyms_per_s": pseudonyms / wall, "concurrency": config.concurrency}


async def _run_realtime(config: BenchConfig, trips: List[TripRecord], sink: Sink, out: Optional[Path]):
    servers: List[ServerProcess] = []
    scale = config.tolerance_scale
    skew = int(config.skew_s * 1000 * scale)
    probe_n = config.saturation_probe
    all_trips = list(trips)
    keypairs = [crypto.generate_keypair() for _ in range(len(all_trips) + probe_n)]
    first = min(t.depart for t in trips)
    probe_trips = [TripRecord(f"probe{i}", first, 1) for i in range(probe_n)]
    try:
        if config.launch_servers:
            deploy_dir = (out or Path(".")) / "deploy"
            if deploy_dir.exists():
                shutil.rmtree(deploy_dir)
            create_deployment(deploy_dir, policy=config.kind, tau_p_ms=int(config.tau_s * 1000),
                              gamma_ms=int(config.gamma_s * 1000), t_date_ms=config.t_date_ms,
                              skew_ms=skew, grace_ms=int(config.grace_s * 1000 * scale))
            ltcs = _provision_local(deploy_dir, all_trips + probe_trips, keypairs, config.t_date_ms)
            pca_spec = load_pca(deploy_dir / "pca.json")
            pca_info = pca_spec.service.get_config()
            pca_spec.service.store.close()
            client = load_client(deploy_dir)
            # key pools are filled off-line, before simulated time starts running
            contexts = build_contexts(trips, ltcs[:len(trips)], keypairs[:len(trips)], pca_info,
                                      client.ltca_public_key, skew)
            sim_origin = first - int(config.lead_s * 1000 * config.compression)
            clock_cfg = {"kind": "compressed", "sim_origin_ms": sim_origin, "factor": config.compression,
                         "wall_origin": time.time() + config.lead_s}
            set_clock(deploy_dir, clock_cfg)
            client.clock = clock_cfg
            servers.append(ServerProcess("ltca", deploy_dir / "ltca.json"))
            servers.append(ServerProcess("pca", deploy_dir / "pca.json"))
            ltca_addr, pca_addr = servers[0].address, servers[1].address
        else:
            if not (config.deployment and config.ltca and config.pca):
                raise ValueError("external servers need --deployment, --ltca and --pca")
            client = load_client(config.deployment)
            ltca_addr, pca_addr = config.ltca, config.pca
            ltcs = await _register_remote(TcpTransport.from_address(ltca_addr, client.ltca_ssl),
                                          all_trips + probe_trips, keypairs, client.admin_credential)
            pca_info = await call_once(TcpTransport.from_address(pca_addr, client.pca_ssl), ConfigRequest())
            contexts = build_contexts(trips, ltcs[:len(trips)], keypairs[:len(trips)], pca_info,
                                      client.ltca_public_key, skew)
        clock = clock_from_config(client.clock)
        lt = TcpTransport.from_address(ltca_addr, client.ltca_ssl, timeout=config.timeout_s)
        pt_inner = TcpTransport.from_address(pca_addr, client.pca_ssl, timeout=config.timeout_s)
        if config.connections == "pooled":
            lt, pt_inner = PooledTransport(lt), PooledTransport(pt_inner)
        pt: object = pt_inner
        if config.outage_s:
            pt = OutageTransport(pt_inner, clock, config.origin_ms + int(config.outage_s[0] * 1000),
                                 config.origin_ms + int(config.outage_s[1] * 1000))
        late = (clock.now() - first) / config.compression
        if late > 0:
            log.warning("replay starts %.1f s (wall) after the first departure", late / 1000)

        sem = asyncio.Semaphore(config.concurrency)
        per_trigger = config.protocol_clock == "trigger"

        async def drive(trip: TripRecord, ctx: VehicleContext):
            for entry, residual in ctx.plan(trip):
                await clock.sleep_until(entry.trigger)
                pclock = TriggerClock(clock, entry.trigger) if per_trigger else clock
                sink.add(await ctx.run_entry(entry, pclock, lt, pt, residual=residual,
                                             continue_on_error=True, limiter=sem))

        wall_start = time.perf_counter()
        tasks = [asyncio.ensure_future(drive(t, c)) for t, c in contexts]
        everything = asyncio.gather(*tasks)
        if sink.aborted is not None:
            waiter = asyncio.ensure_future(sink.aborted.wait())
            await asyncio.wait({everything, waiter}, return_when=asyncio.FIRST_COMPLETED)
            if not everything.done():
                for t in tasks:
                    t.cancel()
            waiter.cancel()
            await asyncio.gather(everything, return_exceptions=True)
        else:
            await everything
        replay_wall = time.perf_counter() - wall_start

        extra = {"replay_wall_s": replay_wall, "late_start_wall_ms": max(late, 0.0),
                 "clock": client.clock, "ltca": ltca_addr, "pca": pca_addr}
        if probe_n and not (sink.aborted is not None and sink.aborted.is_set()):
            probe_kps = keypairs[len(trips):]
            probe_ltcs = ltcs[len(trips):]

            async def factory(ptrips):
                return build_contexts(ptrips, probe_ltcs, probe_kps, pca_info, client.ltca_public_key, skew)

            extra["saturation"] = await _saturation_probe(probe_n, config, clock, lt, pt_inner, factory)
        for t in (lt, pt_inner):
            if isinstance(t, PooledTransport):
                await t.close()
        return contexts, extra
    finally:
        for s in servers:
            s.stop()


def run_experiment(config: BenchConfig, trips: Optional[Sequence[TripRecord]] = None) -> BenchResult:
    """Replay ``trips`` (or ``config.trace``) and return records, summary, series and audits."""
    trips = load_trips(config, trips)
    if not trips:
        raise ValueError("trace holds no trips")
    out = Path(config.out) if config.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    sink_holder: Dict[str, Sink] = {}

    async def main():
        sink = Sink(config.abort_error_rate, config.abort_min_records)
        sink_holder["sink"] = sink
        if config.mode == "virtual":
            contexts, _ = await _run_virtual(config, trips, sink)
            return contexts, {}
        return await _run_realtime(config, trips, sink, out)

    contexts, extra = asyncio.run(main())
    sink = sink_holder["sink"]
    policy = config.policy_config()
    # event completion times are in protocol time; convert the lag back to wall time
    compressed = config.mode == "realtime" and config.protocol_clock == "compressed"
    factor = config.compression if compressed else 1.0
    audit = audit_run(policy, contexts, sink.records, factor=factor)
    audit["throughput"] = _throughput(sink.completed_wall)
    for key in ("saturation", "replay_wall_s", "late_start_wall_ms"):
        if key in extra:
            audit[key] = extra[key]
    audit["aborted"] = bool(sink.aborted is not None and sink.aborted.is_set())
    ok = [r for r in sink.records if r.ok]
    summary = summary_stats(ok) if ok else None
    series = per_minute_series(sink.records, origin=config.t_date_ms)
    result = BenchResult(sink.records, summary, series, audit, out, contexts)
    if out:
        export(result, config, out, {k: v for k, v in extra.items() if k != "saturation"})
    if audit["aborted"]:
        raise BenchAborted(f"error rate {audit['error_rate']:.3f} exceeded {config.abort_error_rate}")
    return result


def load_config(path) -> BenchConfig:
    return BenchConfig(**load_json(path))
