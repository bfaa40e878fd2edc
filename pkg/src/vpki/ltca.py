"""Long-Term CA: vehicle registry, LTC issuance and ticket issuance.

The LTCA authenticates vehicles by their LTC and hands out service-granting
tickets.  It only ever sees ``H(Id_PCA || Rnd_tkt)``, never the PCA the
vehicle is going to use.
"""

from __future__ import annotations

import hmac
import logging
import secrets
from dataclasses import dataclass
from typing import Optional

from . import crypto
from .codec import decode, encode
from .errors import (
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
from .model import (
    RND_SIZE,
    SUBJECT_ID_SIZE,
    UNSIGNED,
    LongTermCertificate,
    RegisterRequest,
    RegisterResponse,
    RevealTicketRequest,
    RevealTicketResponse,
    Ticket,
    TicketRequest,
    TicketResponse,
    sign_message,
    ticket_ik,
    verify_message,
)
from .store import MEMORY, LtcaStore

log = logging.getLogger(__name__)

YEAR_MS = 365 * 24 * 3600 * 1000


@dataclass
class LtcaConfig:
    issuer_id: str
    skew_ms: int = 60_000
    grace_ms: int = 60_000
    max_window_ms: Optional[int] = None
    ltc_validity_ms: int = YEAR_MS
    ra_credential: bytes = b""
    admin_credential: bytes = b""


def _authorized(expected: bytes, presented: bytes) -> bool:
    return bool(expected) and hmac.compare_digest(expected, presented)


class Ltca:
    def __init__(self, config: LtcaConfig, keypair: crypto.KeyPair, store: LtcaStore | None = None):
        self.config = config
        self.keypair = keypair
        self.store = store if store is not None else LtcaStore(MEMORY)

    @property
    def issuer_id(self) -> str:
        return self.config.issuer_id

    @property
    def public_key(self) -> bytes:
        return self.keypair.public

    # -- registration ----------------------------------------------------------

    def register_vehicle(self, subject_id: bytes, public_key: bytes, now: int) -> LongTermCertificate:
        if len(subject_id) != SUBJECT_ID_SIZE:
            raise ValueError(f"subject_id must be {SUBJECT_ID_SIZE} bytes")
        if not crypto.is_valid_public_key(public_key):
            raise ValueError("not a compressed P-256 public key")
        ltc = sign_message(
            LongTermCertificate(
                subject_id=subject_id,
                public_key=public_key,
                valid_from=now,
                valid_to=now + self.config.ltc_validity_ms,
                issuer_id=self.issuer_id,
                signature=UNSIGNED,
            ),
            self.keypair,
        )
        with self.store.transaction() as cur:
            if cur.execute("SELECT 1 FROM registry WHERE subject_id = ?", (subject_id,)).fetchone():
                raise DuplicateRegistration(subject_id.hex())
            raw = encode(ltc)
            cur.execute(
                "INSERT INTO registry (subject_id, ltc, ltc_digest) VALUES (?, ?, ?)",
                (subject_id, raw, crypto.digest(raw)),
            )
        return ltc

    def lookup(self, subject_id: bytes) -> Optional[LongTermCertificate]:
        row = self.store.query_one("SELECT ltc FROM registry WHERE subject_id = ?", (subject_id,))
        return decode(row[0], LongTermCertificate) if row else None

    # -- ticket issuance -------------------------------------------------------

    def _check_ltc(self, ltc: LongTermCertificate, now: int) -> None:
        if ltc.issuer_id != self.issuer_id:
            raise UnknownVehicle(f"LTC issued by {ltc.issuer_id!r}")
        row = self.store.query_one("SELECT ltc FROM registry WHERE subject_id = ?", (ltc.subject_id,))
        if row is None or row[0] != encode(ltc):
            raise UnknownVehicle(ltc.subject_id.hex())
        if not verify_message(ltc, self.public_key):
            raise BadSignature("LTC signature")
        if not ltc.valid_from <= now < ltc.valid_to:
            raise ExpiredLtc(f"LTC valid [{ltc.valid_from}, {ltc.valid_to}), now {now}")

    def issue_ticket(self, req: TicketRequest, now: int) -> TicketResponse:
        self._check_ltc(req.ltc, now)
        if not verify_message(req, req.ltc.public_key):
            raise BadSignature("ticket request signature")
        if abs(now - req.timestamp) > self.config.skew_ms:
            raise StaleTimestamp(f"request time {req.timestamp}, now {now}")
        if req.t_s >= req.t_e:
            raise InvalidWindow(f"[{req.t_s}, {req.t_e})")
        cap = self.config.max_window_ms
        if cap is not None and req.t_e - req.t_s > cap:
            raise InvalidWindow(f"window of {req.t_e - req.t_s} ms exceeds cap {cap}")

        rnd_ik_tkt = secrets.token_bytes(RND_SIZE)
        ik = ticket_ik(req.ltc, req.t_s, req.t_e, rnd_ik_tkt)
        ltc_digest = req.ltc.digest()
        with self.store.transaction() as cur:
            serial = self.store.allocate(cur, "ticket")
            ticket = sign_message(
                Ticket(
                    serial=serial,
                    pca_commitment=req.pca_commitment,
                    ik_tkt=ik,
                    t_s=req.t_s,
                    t_e=req.t_e,
                    exp_tkt=req.t_e + self.config.grace_ms,
                    signature=UNSIGNED,
                ),
                self.keypair,
            )
            cur.execute(
                "INSERT INTO tickets (serial, ticket, rnd_ik_tkt, ltc_digest) VALUES (?, ?, ?, ?)",
                (serial, encode(ticket), rnd_ik_tkt, ltc_digest),
            )
        return TicketResponse(
            res_id=req.req_id,
            ticket=ticket,
            rnd_ik_tkt=rnd_ik_tkt,
            nonce_echo=(req.nonce + 1) % (1 << 64),
            timestamp=now,
        )

    # -- resolution support --------------------------------------------------------

    def reveal_ticket_binding(self, serial: int, authorization: bytes) -> RevealTicketResponse:
        if not _authorized(self.config.ra_credential, authorization):
            raise Unauthorized("resolution credential rejected")
        row = self.store.query_one(
            "SELECT t.ticket, t.rnd_ik_tkt, t.ltc_digest, r.ltc FROM tickets t "
            "LEFT JOIN registry r ON r.ltc_digest = t.ltc_digest WHERE t.serial = ?",
            (serial,),
        )
        if row is None:
            raise UnknownSerial(str(serial))
        if row[3] is None:
            raise UnknownSerial(f"LTC bound to ticket {serial} is no longer registered")
        return RevealTicketResponse(
            rnd_ik_tkt=row[1],
            ltc_digest=row[2],
            ltc=decode(row[3], LongTermCertificate),
            ticket=decode(row[0], Ticket),
        )

    # -- wire dispatch -----------------------------------------------------------

    def handle(self, msg, now: int):
        if isinstance(msg, TicketRequest):
            return self.issue_ticket(msg, now)
        if isinstance(msg, RevealTicketRequest):
            return self.reveal_ticket_binding(msg.serial, msg.credential)
        if isinstance(msg, RegisterRequest):
            if not _authorized(self.config.admin_credential, msg.credential):
                raise Unauthorized("registration credential rejected")
            try:
                return RegisterResponse(self.register_vehicle(msg.subject_id, msg.public_key, now))
            except ValueError as exc:
                raise UnsupportedRequest(str(exc)) from None
        raise UnsupportedRequest(type(msg).__name__)
