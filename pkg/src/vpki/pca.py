"""Pseudonym CA: validates tickets and issues batches of pseudonyms.

Each request is checked in this order: freshness, ticket signature against the
trust store, ticket expiry and single use, the PCA-identity commitment, the
requested interval, proof-of-possession of every key, and finally that the
number of keys matches the number of lifetime slices the window yields.
"""

from __future__ import annotations

import hmac
import secrets
from dataclasses import dataclass
from typing import Dict, List, Tuple

from . import crypto
from .codec import encode
from .errors import (
    CommitmentMismatch,
    ExpiredTicket,
    IntervalMismatch,
    InvalidWindow,
    KeyCountMismatch,
    PopFailure,
    StaleTimestamp,
    TicketAlreadyUsed,
    Unauthorized,
    UnknownSerial,
    UnsupportedRequest,
    UntrustedIssuer,
)
from .model import (
    RND_SIZE,
    UNSIGNED,
    ConfigRequest,
    ConfigResponse,
    Pseudonym,
    PsnymRequest,
    PsnymResponse,
    RevealPseudonymRequest,
    RevealPseudonymResponse,
    Ticket,
    pca_commitment,
    pseudonym_ik,
    sign_message,
    verify_message,
)
from .policy import PolicyConfig, PolicyKind, is_grid_cell, slice_lifetimes
from .store import MEMORY, PcaStore


@dataclass
class PcaConfig:
    pca_id: str
    trust_store: Dict[str, bytes]
    tau_p: int = 30_000
    gamma_p3: int = 300_000
    t_date: int = 0
    policy: PolicyKind = PolicyKind.P3
    skew_ms: int = 60_000
    ra_credential: bytes = b""

    def policy_config(self) -> PolicyConfig:
        gamma = self.gamma_p3 if self.policy is not PolicyKind.P1 else 0
        return PolicyConfig(PolicyKind(self.policy), self.tau_p, gamma, self.t_date)


class Pca:
    def __init__(self, config: PcaConfig, keypair: crypto.KeyPair, store: PcaStore | None = None):
        self.config = config
        self.keypair = keypair
        self.store = store if store is not None else PcaStore(MEMORY)
        self.policy = config.policy_config()

    @property
    def pca_id(self) -> str:
        return self.config.pca_id

    @property
    def public_key(self) -> bytes:
        return self.keypair.public

    def get_config(self) -> ConfigResponse:
        c = self.config
        return ConfigResponse(
            pca_id=c.pca_id,
            pca_public_key=self.public_key,
            policy=int(c.policy),
            tau_p=c.tau_p,
            gamma_p3=c.gamma_p3,
            t_date=c.t_date,
        )

    def _trusted(self, ticket: Ticket) -> bool:
        return any(verify_message(ticket, key) for key in self.config.trust_store.values())

    def expected_slices(self, t_s: int, t_e: int, at: int) -> List[Tuple[int, int]]:
        if self.policy.kind is PolicyKind.P3 and not is_grid_cell(self.policy, (t_s, t_e)):
            raise InvalidWindow(f"[{t_s}, {t_e}) is not a cell of the P3 grid")
        if t_s >= t_e:
            raise InvalidWindow(f"[{t_s}, {t_e})")
        return slice_lifetimes(self.policy, (t_s, t_e), at)

    def issue_pseudonyms(self, req: PsnymRequest, now: int) -> PsnymResponse:
        if abs(now - req.timestamp) > self.config.skew_ms:
            raise StaleTimestamp(f"request time {req.timestamp}, now {now}")
        ticket = req.ticket
        if not self._trusted(ticket):
            raise UntrustedIssuer("ticket signature does not verify under any trusted LTCA")
        if now > ticket.exp_tkt:
            raise ExpiredTicket(f"ticket expired at {ticket.exp_tkt}, now {now}")
        if self.store.query_one("SELECT 1 FROM used_tickets WHERE ticket_ik = ?", (ticket.ik_tkt,)):
            raise TicketAlreadyUsed(f"ticket {ticket.serial}")
        if not hmac.compare_digest(pca_commitment(self.pca_id, req.rnd_tkt), ticket.pca_commitment):
            raise CommitmentMismatch("ticket was not issued for this PCA")
        if (req.t_s, req.t_e) != (ticket.t_s, ticket.t_e):
            raise IntervalMismatch(f"request [{req.t_s}, {req.t_e}) vs ticket [{ticket.t_s}, {ticket.t_e})")
        for i, key in enumerate(req.keys):
            if not key.verify():
                raise PopFailure(i)
        # Expiry is judged at the vehicle's request time so that vehicle and
        # PCA always derive the same slice set; freshness is bounded above.
        slices = self.expected_slices(req.t_s, req.t_e, req.timestamp)
        if len(req.keys) != len(slices):
            raise KeyCountMismatch(len(slices), len(req.keys))

        rnds = [secrets.token_bytes(RND_SIZE) for _ in slices]
        with self.store.transaction() as cur:
            if cur.execute("SELECT 1 FROM used_tickets WHERE ticket_ik = ?", (ticket.ik_tkt,)).fetchone():
                raise TicketAlreadyUsed(f"ticket {ticket.serial}")
            first = self.store.allocate(cur, "pseudonym", len(slices))
            pseudonyms = []
            rows = []
            for i, ((s, e), key, rnd) in enumerate(zip(slices, req.keys, rnds)):
                p = sign_message(
                    Pseudonym(
                        serial=first + i,
                        public_key=key.public_key,
                        ik_p=pseudonym_ik(ticket.ik_tkt, key.public_key, s, e, rnd),
                        t_s=s,
                        t_e=e,
                        signature=UNSIGNED,
                    ),
                    self.keypair,
                )
                pseudonyms.append(p)
                rows.append((p.serial, encode(p), rnd, ticket.serial, ticket.ik_tkt))
            cur.executemany(
                "INSERT INTO pseudonyms (serial, pseudonym, rnd_ik, ticket_serial, ticket_ik) "
                "VALUES (?, ?, ?, ?, ?)",
                rows,
            )
            cur.execute(
                "INSERT INTO used_tickets (ticket_ik, ticket_serial) VALUES (?, ?)",
                (ticket.ik_tkt, ticket.serial),
            )
        return PsnymResponse(
            res_id=req.req_id,
            pseudonyms=tuple(pseudonyms),
            rnd_iks=tuple(rnds),
            nonce_echo=(req.nonce + 1) % (1 << 64),
            timestamp=now,
        )

    def reveal_pseudonym_binding(self, serial: int, authorization: bytes) -> RevealPseudonymResponse:
        expected = self.config.ra_credential
        if not (expected and hmac.compare_digest(expected, authorization)):
            raise Unauthorized("resolution credential rejected")
        row = self.store.query_one(
            "SELECT rnd_ik, ticket_serial, ticket_ik FROM pseudonyms WHERE serial = ?", (serial,)
        )
        if row is None:
            raise UnknownSerial(str(serial))
        return RevealPseudonymResponse(rnd_ik=row[0], ticket_serial=row[1], ticket_ik=row[2])

    def handle(self, msg, now: int):
        if isinstance(msg, PsnymRequest):
            return self.issue_pseudonyms(msg, now)
        if isinstance(msg, ConfigRequest):
            return self.get_config()
        if isinstance(msg, RevealPseudonymRequest):
            return self.reveal_pseudonym_binding(msg.serial, msg.credential)
        raise UnsupportedRequest(type(msg).__name__)
