from dataclasses import replace

import pytest

from vpki import crypto
from vpki.errors import (
    BadSignature,
    DuplicateRegistration,
    ExpiredLtc,
    InvalidWindow,
    StaleTimestamp,
    Unauthorized,
    UnknownSerial,
    UnknownVehicle,
    UnsupportedRequest,
)
from vpki.ltca import Ltca, LtcaConfig
from vpki.model import (
    UNSIGNED,
    ConfigRequest,
    RegisterRequest,
    ticket_ik,
    sign_message,
    subject_id_from_name,
    verify_message,
)
from vpki.obu import VehicleContext
from vpki.store import LtcaStore

from .conftest import ADMIN, MORNING, RA, T_DATE, make_world

WINDOW = (MORNING, MORNING + 300_000)


def test_issue_ticket(world):
    v = world.vehicle(pool=0)
    req, rnd = v.build_ticket_request(WINDOW, MORNING)
    resp = world.ltca.issue_ticket(req, MORNING)
    t = resp.ticket
    assert verify_message(t, world.ltca.public_key)
    assert (t.t_s, t.t_e, t.exp_tkt) == (*WINDOW, WINDOW[1] + 60_000)
    assert t.pca_commitment == req.pca_commitment
    assert t.ik_tkt == ticket_ik(v.ltc, *WINDOW, resp.rnd_ik_tkt)
    assert resp.nonce_echo == req.nonce + 1 and resp.res_id == req.req_id
    v.check_ticket_response(req, resp)


def test_serials_are_unique_and_increasing(world):
    v = world.vehicle(pool=0)
    serials = [world.ltca.issue_ticket(v.build_ticket_request(WINDOW, MORNING)[0], MORNING).ticket.serial
               for _ in range(5)]
    assert serials == sorted(set(serials))


def test_serials_survive_restart(tmp_path):
    path = tmp_path / "ltca.db"
    kp, vk = crypto.generate_keypair(), crypto.generate_keypair()
    pca_info = make_world().pca.get_config()
    ltca = Ltca(LtcaConfig("ltca-1"), kp, LtcaStore(path))
    ltc = ltca.register_vehicle(subject_id_from_name("a"), vk.public, T_DATE)
    v = VehicleContext("a", ltc, vk, pca_info, ltca.public_key)
    first = ltca.issue_ticket(v.build_ticket_request(WINDOW, MORNING)[0], MORNING).ticket.serial
    ltca.store.close()
    again = Ltca(LtcaConfig("ltca-1"), kp, LtcaStore(path))
    assert again.lookup(subject_id_from_name("a")) == ltc
    second = again.issue_ticket(v.build_ticket_request(WINDOW, MORNING)[0], MORNING).ticket.serial
    assert second == first + 1


def test_duplicate_registration(world):
    kp = crypto.generate_keypair()
    world.ltca.register_vehicle(b"\x01" * 16, kp.public, T_DATE)
    with pytest.raises(DuplicateRegistration):
        world.ltca.register_vehicle(b"\x01" * 16, kp.public, T_DATE)


def test_unknown_vehicle(world):
    v = world.vehicle(pool=0)
    forged = sign_message(replace(v.ltc, subject_id=b"\x09" * 16, signature=UNSIGNED), world.ltca.keypair)
    req = sign_message(replace(v.build_ticket_request(WINDOW, MORNING)[0], ltc=forged), v.keypair)
    with pytest.raises(UnknownVehicle):
        world.ltca.issue_ticket(req, MORNING)


def test_foreign_issuer(world):
    v = world.vehicle(pool=0)
    other = replace(v.ltc, issuer_id="ltca-2")
    req = sign_message(replace(v.build_ticket_request(WINDOW, MORNING)[0], ltc=other), v.keypair)
    with pytest.raises(UnknownVehicle):
        world.ltca.issue_ticket(req, MORNING)


def test_bad_request_signature(world):
    v = world.vehicle(pool=0)
    req, _ = v.build_ticket_request(WINDOW, MORNING)
    with pytest.raises(BadSignature):
        world.ltca.issue_ticket(replace(req, nonce=req.nonce ^ 1), MORNING)


def test_expired_ltc(world):
    v = world.vehicle(pool=0)
    later = v.ltc.valid_to
    req, _ = v.build_ticket_request(WINDOW, later)
    with pytest.raises(ExpiredLtc):
        world.ltca.issue_ticket(req, later)


@pytest.mark.parametrize("offset", [-60_001, 60_001])
def test_stale_timestamp(world, offset):
    v = world.vehicle(pool=0)
    req, _ = v.build_ticket_request(WINDOW, MORNING + offset)
    with pytest.raises(StaleTimestamp):
        world.ltca.issue_ticket(req, MORNING)
    req, _ = v.build_ticket_request(WINDOW, MORNING + offset // 2)
    world.ltca.issue_ticket(req, MORNING)


def test_invalid_window(world):
    v = world.vehicle(pool=0)
    for w in [(MORNING, MORNING), (MORNING + 5, MORNING)]:
        req, _ = v.build_ticket_request(w, MORNING)
        with pytest.raises(InvalidWindow):
            world.ltca.issue_ticket(req, MORNING)


def test_window_cap():
    w = make_world()
    w.ltca.config.max_window_ms = 3600_000
    v = w.vehicle(pool=0)
    req, _ = v.build_ticket_request((MORNING, MORNING + 3600_001), MORNING)
    with pytest.raises(InvalidWindow):
        w.ltca.issue_ticket(req, MORNING)


def test_reveal_binding(world):
    v = world.vehicle(pool=0)
    resp = world.ltca.issue_ticket(v.build_ticket_request(WINDOW, MORNING)[0], MORNING)
    rev = world.ltca.reveal_ticket_binding(resp.ticket.serial, RA)
    assert rev.rnd_ik_tkt == resp.rnd_ik_tkt
    assert rev.ltc == v.ltc and rev.ltc_digest == v.ltc.digest()
    assert rev.ticket == resp.ticket
    with pytest.raises(Unauthorized):
        world.ltca.reveal_ticket_binding(resp.ticket.serial, b"wrong")
    with pytest.raises(UnknownSerial):
        world.ltca.reveal_ticket_binding(999, RA)


def test_wire_dispatch(world):
    kp = crypto.generate_keypair()
    resp = world.ltca.handle(RegisterRequest(b"\x05" * 16, kp.public, ADMIN), MORNING)
    assert resp.ltc.public_key == kp.public
    with pytest.raises(Unauthorized):
        world.ltca.handle(RegisterRequest(b"\x06" * 16, kp.public, b"nope"), MORNING)
    with pytest.raises(UnsupportedRequest):
        world.ltca.handle(ConfigRequest(), MORNING)
    with pytest.raises(UnsupportedRequest):
        world.ltca.handle(RegisterRequest(b"\x07" * 16, b"\x05" + b"\x00" * 32, ADMIN), MORNING)


def test_ticket_leaks_nothing_about_pca(world):
    # the LTCA only sees the commitment; two requests for the same PCA look unrelated
    v = world.vehicle(pool=0)
    a, _ = v.build_ticket_request(WINDOW, MORNING)
    b, _ = v.build_ticket_request(WINDOW, MORNING)
    assert a.pca_commitment != b.pca_commitment
