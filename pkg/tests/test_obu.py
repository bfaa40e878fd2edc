from dataclasses import replace

import pytest

from vpki import crypto
from vpki.errors import PoolExhausted, ProtocolViolation, RemoteError, ValidationFailure
from vpki.model import UNSIGNED, ConfigRequest, PsnymResponse, sign_message
from vpki.policy import PolicyKind, TripRecord, compute_schedule, interactions_count
from vpki.transport import LocalTransport

from .conftest import MORNING, make_world

CELL = (MORNING, MORNING + 300_000)


class Tamper:
    """Wraps a service and rewrites its pseudonym responses."""

    def __init__(self, inner, edit):
        self.inner = inner
        self.edit = edit

    def handle(self, msg, now):
        resp = self.inner.handle(msg, now)
        return self.edit(resp) if isinstance(resp, PsnymResponse) else resp


def acquire(world, v, window=CELL, pca=None):
    return world.run(v.acquire(window, world.clock, world.lt, pca or world.pt))


def test_acquire_installs_batch(any_world):
    w = any_world
    v = w.vehicle()
    window = CELL if w.pca.policy.kind is PolicyKind.P3 else (MORNING, MORNING + 95_000)
    acq = acquire(w, v, window)
    assert acq.latency_ms > 0
    lifetimes = [(p.t_s, p.t_e) for p, _ in acq.credentials]
    assert lifetimes[0][0] == MORNING and lifetimes[-1][1] == window[1]
    assert all(a[1] == b[0] for a, b in zip(lifetimes, lifetimes[1:]))
    for p, kp in acq.credentials:
        assert v.current_pseudonym(p.t_s) == (p, kp)
        assert v.current_pseudonym(p.t_e - 1)[0] == p
        # the installed key actually signs for the pseudonym
        assert crypto.verify(p.public_key, b"beacon", crypto.sign(kp, b"beacon"))
    assert v.current_pseudonym(window[1]) is None
    assert v.current_pseudonym(MORNING - 1) is None


def test_late_start_in_cell():
    w = make_world()
    v = w.vehicle()
    w.clock.set(MORNING + 200_000)
    acq = acquire(w, v)
    assert [p.t_s for p, _ in acq.credentials] == [MORNING + 180_000, MORNING + 210_000, MORNING + 240_000,
                                                   MORNING + 270_000]


def test_overlap_rejected(world):
    v = world.vehicle()
    acquire(world, v)
    with pytest.raises(ValidationFailure):
        acquire(world, v)
    assert len(v.store) == 10


def test_pool_exhausted(world):
    v = world.vehicle(pool=3)
    with pytest.raises(PoolExhausted):
        acquire(world, v)


def shifted(resp):
    ps = tuple(replace(p, t_s=p.t_s + 1) for p in resp.pseudonyms)
    return replace(resp, pseudonyms=ps)


def resigned_with_wrong_lifetime(world):
    def edit(resp):
        ps = list(resp.pseudonyms)
        ps[1] = sign_message(replace(ps[1], t_e=ps[1].t_e + 30_000, signature=UNSIGNED), world.pca.keypair)
        return replace(resp, pseudonyms=tuple(ps))
    return edit


def foreign_key(resp):
    other = crypto.generate_keypair()
    ps = tuple(sign_message(replace(p, signature=UNSIGNED), other) for p in resp.pseudonyms)
    return replace(resp, pseudonyms=ps)


def dropped(resp):
    return replace(resp, pseudonyms=resp.pseudonyms[:-1], rnd_iks=resp.rnd_iks[:-1])


def wrong_rnd(resp):
    return replace(resp, rnd_iks=(b"\x00" * 32,) + resp.rnd_iks[1:])


@pytest.mark.parametrize("edit", [shifted, foreign_key, dropped, wrong_rnd, "lifetime"])
def test_validation_failures(world, edit):
    if edit == "lifetime":
        edit = resigned_with_wrong_lifetime(world)
    v = world.vehicle()
    bad = LocalTransport(Tamper(world.pca, edit), world.clock)
    with pytest.raises(ValidationFailure):
        acquire(world, v, pca=bad)
    assert v.store == []


def test_nonce_echo_checked(world):
    v = world.vehicle()
    bad = LocalTransport(Tamper(world.pca, lambda r: replace(r, nonce_echo=r.nonce_echo + 1)), world.clock)
    with pytest.raises(ProtocolViolation):
        acquire(world, v, pca=bad)


def test_wrong_response_type(world):
    class Confused:
        def handle(self, msg, now):
            return world.pca.handle(ConfigRequest(), now)

    v = world.vehicle()
    with pytest.raises(ProtocolViolation):
        acquire(world, v, pca=LocalTransport(Confused(), world.clock))


def test_remote_error_carries_code(world):
    v = world.vehicle()
    acquire(world, v)
    # replaying the same ticket is refused by the PCA and reported on the client
    treq, rnd = v.build_ticket_request(CELL, MORNING)
    tresp = world.ltca.issue_ticket(treq, MORNING)
    preq, _ = v.build_psnym_request(treq, tresp, rnd, MORNING)
    world.pca.issue_pseudonyms(preq, MORNING)

    async def replay():
        async with world.pt.connect() as conn:
            return await conn.call(preq)

    with pytest.raises(RemoteError) as err:
        world.run(replay())
    assert err.value.code == "TicketAlreadyUsed"


@pytest.mark.parametrize("kind", list(PolicyKind), ids=lambda k: k.label)
def test_run_trip_follows_schedule(kind):
    w = make_world(kind)
    trip = TripRecord("t", MORNING + 12_345, 1_000_000)
    v = w.vehicle()
    records = w.run(v.run_trip(trip, w.clock, w.lt, w.pt))
    assert len(records) == interactions_count(w.pca.policy, trip)
    assert [r.trigger for r in records] == [e.trigger for e in compute_schedule(w.pca.policy, trip)]
    assert all(r.outcome == "ok" for r in records)
    for t in range(trip.depart, trip.end, 7_000):
        assert v.current_pseudonym(t) is not None, t
    starts = [p.t_s for p, _ in v.store]
    assert starts == sorted(starts)


def test_p1_residual_request():
    w = make_world(PolicyKind.P1)
    trip = TripRecord("t", MORNING, 600_000, estimated_duration=400_000)
    v = w.vehicle()
    plan = v.plan(trip)
    assert [(e.t_s, e.t_e, r) for e, r in plan] == [(MORNING, MORNING + 400_000, False),
                                                    (MORNING + 400_000, MORNING + 600_000, True)]
    w.run(v.run_trip(trip, w.clock, w.lt, w.pt))
    assert [e.residual for e in v.history] == [False, True]
    assert v.current_pseudonym(MORNING + 599_999) is not None
    over = TripRecord("u", MORNING, 600_000, estimated_duration=900_000)
    assert len(v.plan(over)) == 1


def test_errors_recorded_when_continuing(world):
    v = world.vehicle(pool=0)
    trip = TripRecord("t", MORNING, 600_000)
    records = world.run(v.run_trip(trip, world.clock, world.lt, world.pt, continue_on_error=True))
    assert [r.outcome for r in records] == ["PoolExhausted"] * 2
    assert all(r.n_pseudonyms == 0 for r in records)
    assert [e.outcome for e in v.history] == ["PoolExhausted"] * 2
