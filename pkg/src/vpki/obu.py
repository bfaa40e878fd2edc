"""Vehicle-side client: request building, response validation, pseudonym store.

A :class:`VehicleContext` belongs to a single task at a time.  Its key pool is
filled ahead of any measurement, matching the assumption that on-board units
generate (and self-sign) pseudonym keys off-line.
"""

from __future__ import annotations

import bisect
import hmac
import itertools
import secrets
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Optional, Tuple

from . import crypto
from .errors import (
    PoolExhausted,
    ProtocolViolation,
    ValidationFailure,
    VpkiError,
)
from .model import (
    RND_SIZE,
    UNSIGNED,
    ConfigResponse,
    LongTermCertificate,
    Pseudonym,
    PsnymRequest,
    PsnymResponse,
    SelfSignedKey,
    TicketRequest,
    TicketResponse,
    pca_commitment,
    pseudonym_ik,
    sign_message,
    verify_message,
)
from .policy import (
    PolicyConfig,
    PolicyKind,
    ScheduleEntry,
    TripRecord,
    Window,
    compute_schedule,
    max_slices,
    slice_lifetimes,
)
from .stats import OK, LatencyRecord

U64_MOD = 1 << 64
_req_ids = itertools.count(1)

Credential = Tuple[Pseudonym, crypto.KeyPair]


def policy_from_config(info: ConfigResponse) -> PolicyConfig:
    kind = PolicyKind(info.policy)
    gamma = info.gamma_p3 if kind is not PolicyKind.P1 else 0
    return PolicyConfig(kind, info.tau_p, gamma, info.t_date)


@dataclass
class Acquisition:
    credentials: List[Credential]
    latency_ms: float


@dataclass
class AcquisitionEvent:
    """What happened at one schedule trigger, in simulated time."""

    trigger: int
    t_s: int
    t_e: int
    outcome: str
    n_pseudonyms: int = 0
    completed: Optional[int] = None
    residual: bool = False


@dataclass
class VehicleContext:
    vehicle_id: str
    ltc: LongTermCertificate
    keypair: crypto.KeyPair
    pca_info: ConfigResponse
    ltca_public_key: bytes
    skew_ms: int = 60_000
    key_pool: Deque[Tuple[crypto.KeyPair, SelfSignedKey]] = field(default_factory=deque)
    store: List[Credential] = field(default_factory=list)
    history: List[AcquisitionEvent] = field(default_factory=list)

    def __post_init__(self):
        self.policy = policy_from_config(self.pca_info)
        self._starts: List[int] = [p.t_s for p, _ in self.store]

    # -- key pool -------------------------------------------------------------

    def fill_pool(self, n: int) -> None:
        for _ in range(n):
            kp = crypto.generate_keypair()
            ssk = SelfSignedKey.create(kp)
            # drop the OpenSSL handle; it is rebuilt only if the key is used to sign
            self.key_pool.append((crypto.KeyPair(kp.private, kp.public), ssk))

    def pool_size_for(self, trip: TripRecord) -> int:
        return max_slices(self.policy, [e for e, _ in self.plan(trip)])

    def _draw(self, n: int) -> List[Tuple[crypto.KeyPair, SelfSignedKey]]:
        if len(self.key_pool) < n:
            raise PoolExhausted(f"need {n} keys, pool holds {len(self.key_pool)}")
        return [self.key_pool.popleft() for _ in range(n)]

    # -- protocol messages ----------------------------------------------------

    def build_ticket_request(self, window: Window, now: int) -> Tuple[TicketRequest, bytes]:
        rnd_tkt = secrets.token_bytes(RND_SIZE)
        req = TicketRequest(
            req_id=next(_req_ids) % U64_MOD,
            pca_commitment=pca_commitment(self.pca_info.pca_id, rnd_tkt),
            t_s=window[0],
            t_e=window[1],
            ltc=self.ltc,
            nonce=secrets.randbits(64),
            timestamp=now,
            signature=UNSIGNED,
        )
        return sign_message(req, self.keypair), rnd_tkt

    def check_ticket_response(self, req: TicketRequest, resp) -> None:
        if not isinstance(resp, TicketResponse):
            raise ProtocolViolation(f"expected TicketResponse, got {type(resp).__name__}")
        if resp.nonce_echo != (req.nonce + 1) % U64_MOD:
            raise ProtocolViolation("ticket response nonce echo mismatch")
        if resp.res_id != req.req_id:
            raise ProtocolViolation("ticket response id mismatch")
        if abs(resp.timestamp - req.timestamp) > self.skew_ms:
            raise ProtocolViolation("ticket response timestamp outside skew window")
        t = resp.ticket
        if not verify_message(t, self.ltca_public_key):
            raise ValidationFailure("ticket signature does not verify under the LTCA key")
        if (t.t_s, t.t_e) != (req.t_s, req.t_e) or t.pca_commitment != req.pca_commitment:
            raise ValidationFailure("ticket does not match the request")

    def build_psnym_request(self, ticket_request: TicketRequest, ticket_response, rnd_tkt: bytes,
                            now: int) -> Tuple[PsnymRequest, List[crypto.KeyPair]]:
        """Pseudonym request for the ticket just obtained, plus the key pairs it certifies."""
        self.check_ticket_response(ticket_request, ticket_response)
        ticket = ticket_response.ticket
        n = len(slice_lifetimes(self.policy, (ticket.t_s, ticket.t_e), now))
        drawn = self._draw(n)
        req = PsnymRequest(
            req_id=next(_req_ids) % U64_MOD,
            rnd_tkt=rnd_tkt,
            t_s=ticket.t_s,
            t_e=ticket.t_e,
            ticket=ticket,
            keys=tuple(ssk for _, ssk in drawn),
            nonce=secrets.randbits(64),
            timestamp=now,
        )
        return req, [kp for kp, _ in drawn]

    def check_psnym_response(self, req: PsnymRequest, keys: List[crypto.KeyPair], resp) -> List[Credential]:
        if not isinstance(resp, PsnymResponse):
            raise ProtocolViolation(f"expected PsnymResponse, got {type(resp).__name__}")
        if resp.nonce_echo != (req.nonce + 1) % U64_MOD or resp.res_id != req.req_id:
            raise ProtocolViolation("pseudonym response nonce echo or id mismatch")
        if abs(resp.timestamp - req.timestamp) > self.skew_ms:
            raise ProtocolViolation("pseudonym response timestamp outside skew window")
        expected = slice_lifetimes(self.policy, (req.t_s, req.t_e), req.timestamp)
        if not len(resp.pseudonyms) == len(resp.rnd_iks) == len(keys) == len(expected):
            raise ValidationFailure(
                f"got {len(resp.pseudonyms)} pseudonyms / {len(resp.rnd_iks)} nonces for {len(expected)} slices")
        pca_key = self.pca_info.pca_public_key
        out = []
        for p, rnd, kp, (s, e) in zip(resp.pseudonyms, resp.rnd_iks, keys, expected):
            if p.public_key != kp.public:
                raise ValidationFailure(f"pseudonym {p.serial} certifies a key we did not send")
            if (p.t_s, p.t_e) != (s, e):
                raise ValidationFailure(f"pseudonym {p.serial} lifetime [{p.t_s}, {p.t_e}) != [{s}, {e})")
            if not verify_message(p, pca_key):
                raise ValidationFailure(f"pseudonym {p.serial} signature invalid")
            ik = pseudonym_ik(req.ticket.ik_tkt, p.public_key, p.t_s, p.t_e, rnd)
            if not hmac.compare_digest(ik, p.ik_p):
                raise ValidationFailure(f"pseudonym {p.serial} identifiable key does not bind to the ticket")
            out.append((p, kp))
        return out

    # -- pseudonym store -------------------------------------------------------

    def _install(self, creds: List[Credential]) -> None:
        starts = list(self._starts)
        store = list(self.store)
        for p, kp in creds:
            i = bisect.bisect_left(starts, p.t_s)
            if i > 0 and store[i - 1][0].t_e > p.t_s:
                raise ValidationFailure(f"pseudonym [{p.t_s}, {p.t_e}) overlaps a held pseudonym")
            if i < len(store) and store[i][0].t_s < p.t_e:
                raise ValidationFailure(f"pseudonym [{p.t_s}, {p.t_e}) overlaps a held pseudonym")
            starts.insert(i, p.t_s)
            store.insert(i, (p, kp))
        self.store, self._starts = store, starts

    def current_pseudonym(self, t: int) -> Optional[Credential]:
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and t < self.store[i][0].t_e:
            return self.store[i]
        return None

    # -- end-to-end --------------------------------------------------------------

    async def acquire(self, window: Window, clock, ltca, pca,
                      timer: Callable[[], float] = time.perf_counter) -> Acquisition:
        """Run ticket and pseudonym acquisition for ``window``; install the result.

        The latency covers everything from building the ticket request to
        validating the pseudonyms, connection setup included.  Transport
        connections are opened for this acquisition only.
        """
        start = timer()
        treq, rnd_tkt = self.build_ticket_request(window, clock.now())
        async with ltca.connect() as conn:
            tresp = await conn.call(treq)
        preq, keys = self.build_psnym_request(treq, tresp, rnd_tkt, clock.now())
        async with pca.connect() as conn:
            presp = await conn.call(preq)
        creds = self.check_psnym_response(preq, keys, presp)
        self._install(creds)
        return Acquisition(creds, (timer() - start) * 1000.0)

    def plan(self, trip: TripRecord) -> List[Tuple[ScheduleEntry, bool]]:
        """Schedule entries for ``trip``, each flagged if it is a P1 residual re-request."""
        est = trip.estimated_duration
        if self.policy.kind is PolicyKind.P1 and est is not None and est != trip.duration:
            first = ScheduleEntry(trip.depart, trip.depart, trip.depart + est)
            if est > trip.duration:
                return [(first, False)]
            return [(first, False), (ScheduleEntry(first.t_e, first.t_e, trip.end), True)]
        return [(e, False) for e in compute_schedule(self.policy, trip)]

    async def run_entry(self, entry: ScheduleEntry, clock, ltca, pca, *, residual: bool = False,
                        continue_on_error: bool = False, limiter=None,
                        timer: Callable[[], float] = time.perf_counter) -> LatencyRecord:
        """One scheduled acquisition, recorded in ``history``; the caller handles timing."""
        label = self.policy.kind.label
        event = AcquisitionEvent(entry.trigger, entry.t_s, entry.t_e, OK, residual=residual)
        start = timer()
        try:
            if limiter is None:
                acq = await self.acquire(entry.window, clock, ltca, pca, timer)
            else:
                async with limiter:
                    start = timer()
                    acq = await self.acquire(entry.window, clock, ltca, pca, timer)
        except VpkiError as exc:
            if not continue_on_error:
                raise
            event.outcome = exc.code
            record = LatencyRecord(self.vehicle_id, entry.trigger, (timer() - start) * 1000.0,
                                   label, 0, exc.code)
        else:
            event.n_pseudonyms = len(acq.credentials)
            record = LatencyRecord(self.vehicle_id, entry.trigger, acq.latency_ms,
                                   label, len(acq.credentials))
        event.completed = clock.now()
        self.history.append(event)
        return record

    async def run_trip(self, trip: TripRecord, clock, ltca, pca, *, continue_on_error: bool = False,
                       limiter=None, timer: Callable[[], float] = time.perf_counter) -> List[LatencyRecord]:
        records = []
        for entry, residual in self.plan(trip):
            await clock.sleep_until(entry.trigger)
            records.append(await self.run_entry(entry, clock, ltca, pca, residual=residual,
                                                continue_on_error=continue_on_error,
                                                limiter=limiter, timer=timer))
        return records
