"""Certificates, tickets, pseudonyms and the request/response messages.

All times are integer milliseconds since the Unix epoch; all durations are
integer milliseconds.  Messages are immutable; the authorities enforce the
semantic invariants (validity ordering, signatures, nonce echoes).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

from . import crypto
from .codec import (
    BYTES,
    DIGEST,
    PUBKEY,
    RANDOM,
    SIG,
    TEXT,
    U8,
    U64,
    Fixed,
    ListOf,
    Nested,
    Signed,
    encode,
    message,
    wire,
)
from .crypto import Signature

SUBJECT_ID_SIZE = 16
RND_SIZE = 32

#: Placeholder used while a structure is being assembled, before signing.
UNSIGNED = Signature(0, 0)


def sign_message(msg, keypair: crypto.KeyPair):
    """Return ``msg`` with its signature computed over the signed payload."""
    unsigned = replace(msg, signature=UNSIGNED)
    return replace(msg, signature=crypto.sign(keypair, unsigned.payload()))


def verify_message(msg, public: bytes) -> bool:
    return crypto.verify(public, msg.payload(), msg.signature)


# -- credentials -----------------------------------------------------------------

@message(1)
@dataclass(frozen=True)
class LongTermCertificate(Signed):
    subject_id: bytes = wire(Fixed(SUBJECT_ID_SIZE))
    public_key: bytes = wire(PUBKEY)
    valid_from: int = wire(U64)
    valid_to: int = wire(U64)
    issuer_id: str = wire(TEXT)
    signature: Signature = wire(SIG)

    def digest(self) -> bytes:
        return crypto.digest(encode(self))


@message(2)
@dataclass(frozen=True)
class Ticket(Signed):
    serial: int = wire(U64)
    pca_commitment: bytes = wire(DIGEST)
    ik_tkt: bytes = wire(DIGEST)
    t_s: int = wire(U64)
    t_e: int = wire(U64)
    exp_tkt: int = wire(U64)
    signature: Signature = wire(SIG)


@message(3)
@dataclass(frozen=True)
class Pseudonym(Signed):
    serial: int = wire(U64)
    public_key: bytes = wire(PUBKEY)
    ik_p: bytes = wire(DIGEST)
    t_s: int = wire(U64)
    t_e: int = wire(U64)
    signature: Signature = wire(SIG)


@message(8)
@dataclass(frozen=True)
class SelfSignedKey(Signed):
    """A pseudonym public key signed with its own private key."""

    public_key: bytes = wire(PUBKEY)
    signature: Signature = wire(SIG)

    @classmethod
    def create(cls, keypair: crypto.KeyPair) -> "SelfSignedKey":
        return cls(keypair.public, crypto.sign(keypair, keypair.public))

    def verify(self) -> bool:
        return crypto.verify(self.public_key, self.public_key, self.signature)


# -- ticket acquisition ----------------------------------------------------------

@message(4)
@dataclass(frozen=True)
class TicketRequest(Signed):
    req_id: int = wire(U64)
    pca_commitment: bytes = wire(DIGEST)
    t_s: int = wire(U64)
    t_e: int = wire(U64)
    ltc: LongTermCertificate = wire(Nested(LongTermCertificate))
    nonce: int = wire(U64)
    timestamp: int = wire(U64)
    signature: Signature = wire(SIG)


@message(5)
@dataclass(frozen=True)
class TicketResponse:
    res_id: int = wire(U64)
    ticket: Ticket = wire(Nested(Ticket))
    rnd_ik_tkt: bytes = wire(RANDOM)
    nonce_echo: int = wire(U64)
    timestamp: int = wire(U64)


# -- pseudonym acquisition ----------------------------------------------------------

@message(6)
@dataclass(frozen=True)
class PsnymRequest:
    req_id: int = wire(U64)
    rnd_tkt: bytes = wire(RANDOM)
    t_s: int = wire(U64)
    t_e: int = wire(U64)
    ticket: Ticket = wire(Nested(Ticket))
    keys: Tuple[SelfSignedKey, ...] = wire(ListOf(Nested(SelfSignedKey)))
    nonce: int = wire(U64)
    timestamp: int = wire(U64)


@message(7)
@dataclass(frozen=True)
class PsnymResponse:
    res_id: int = wire(U64)
    pseudonyms: Tuple[Pseudonym, ...] = wire(ListOf(Nested(Pseudonym)))
    rnd_iks: Tuple[bytes, ...] = wire(ListOf(RANDOM))
    nonce_echo: int = wire(U64)
    timestamp: int = wire(U64)


# -- auxiliary service messages -------------------------------------------------------

@message(16)
@dataclass(frozen=True)
class ConfigRequest:
    pass


@message(17)
@dataclass(frozen=True)
class ConfigResponse:
    pca_id: str = wire(TEXT)
    pca_public_key: bytes = wire(PUBKEY)
    policy: int = wire(U8)
    tau_p: int = wire(U64)
    gamma_p3: int = wire(U64)
    t_date: int = wire(U64)


@message(18)
@dataclass(frozen=True)
class RevealTicketRequest:
    serial: int = wire(U64)
    credential: bytes = wire(BYTES)


@message(19)
@dataclass(frozen=True)
class RevealTicketResponse:
    rnd_ik_tkt: bytes = wire(RANDOM)
    ltc_digest: bytes = wire(DIGEST)
    ltc: LongTermCertificate = wire(Nested(LongTermCertificate))
    ticket: Ticket = wire(Nested(Ticket))


@message(20)
@dataclass(frozen=True)
class RevealPseudonymRequest:
    serial: int = wire(U64)
    credential: bytes = wire(BYTES)


@message(21)
@dataclass(frozen=True)
class RevealPseudonymResponse:
    rnd_ik: bytes = wire(RANDOM)
    ticket_serial: int = wire(U64)
    ticket_ik: bytes = wire(DIGEST)


@message(22)
@dataclass(frozen=True)
class RegisterRequest:
    subject_id: bytes = wire(Fixed(SUBJECT_ID_SIZE))
    public_key: bytes = wire(PUBKEY)
    credential: bytes = wire(BYTES)


@message(23)
@dataclass(frozen=True)
class RegisterResponse:
    ltc: LongTermCertificate = wire(Nested(LongTermCertificate))


@message(31)
@dataclass(frozen=True)
class ErrorResponse:
    code: str = wire(TEXT)
    detail: str = wire(TEXT)


# -- identifiable keys and commitments ------------------------------------------------

def _u64(v: int) -> bytes:
    return v.to_bytes(8, "big")


def pca_commitment(pca_id: str, rnd_tkt: bytes) -> bytes:
    """H(Id_PCA || Rnd_tkt): hides the chosen PCA from the LTCA."""
    return crypto.hash_concat(pca_id.encode("utf-8"), rnd_tkt)


def ticket_ik(ltc: LongTermCertificate, t_s: int, t_e: int, rnd: bytes) -> bytes:
    """Ticket identifiable key binding a ticket window to one LTC."""
    return crypto.hash_concat(encode(ltc), _u64(t_s), _u64(t_e), rnd)


def pseudonym_ik(ik_tkt: bytes, public_key: bytes, t_s: int, t_e: int, rnd: bytes) -> bytes:
    """Pseudonym identifiable key binding one pseudonym to its ticket."""
    return crypto.hash_concat(ik_tkt, public_key, _u64(t_s), _u64(t_e), rnd)


def subject_id_from_name(name: str) -> bytes:
    """Map a free-form vehicle name to the opaque 16-byte subject identifier."""
    return crypto.digest(name.encode("utf-8"))[:SUBJECT_ID_SIZE]
