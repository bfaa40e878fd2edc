"""ECDSA over NIST P-256 with SHA-256, backed by OpenSSL through ``cryptography``.

Signatures use RFC 6979 deterministic nonces and are normalised to low-s, so a
given (key, payload) pair always produces the same 64-byte ``r || s`` value.
Public keys travel in 33-byte compressed SEC1 form.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

CURVE = ec.SECP256R1()
ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
HALF_ORDER = ORDER // 2

PUBLIC_KEY_SIZE = 33
SIGNATURE_SIZE = 64
DIGEST_SIZE = 32

_ECDSA = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)


class Signature(NamedTuple):
    r: int
    s: int

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Signature":
        if len(raw) != SIGNATURE_SIZE:
            raise ValueError(f"signature must be {SIGNATURE_SIZE} bytes, got {len(raw)}")
        return cls(int.from_bytes(raw[:32], "big"), int.from_bytes(raw[32:], "big"))


@dataclass(frozen=True, eq=False)
class KeyPair:
    private: int
    public: bytes
    _key: ec.EllipticCurvePrivateKey | None = field(default=None, repr=False, compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeyPair):
            return NotImplemented
        return self.private == other.private and self.public == other.public

    def __hash__(self) -> int:
        return hash(self.public)

    @property
    def key(self) -> ec.EllipticCurvePrivateKey:
        if self._key is None:
            object.__setattr__(self, "_key", ec.derive_private_key(self.private, CURVE))
        return self._key


def _compress(public_key: ec.EllipticCurvePublicKey) -> bytes:
    return public_key.public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )


def _wrap(key: ec.EllipticCurvePrivateKey, keep: bool = True) -> KeyPair:
    return KeyPair(
        key.private_numbers().private_value,
        _compress(key.public_key()),
        key if keep else None,
    )


def generate_keypair(keep_handle: bool = True) -> KeyPair:
    """Fresh P-256 key pair from the OS entropy source.

    ``keep_handle=False`` drops the OpenSSL key object so that large pools of
    pseudonym keys stay small in memory; it is rebuilt lazily on first use.
    """
    return _wrap(ec.generate_private_key(CURVE), keep_handle)


def keypair_from_private(private: int) -> KeyPair:
    if not 0 < private < ORDER:
        raise ValueError("private scalar out of range")
    return _wrap(ec.derive_private_key(private, CURVE))


def public_from_private(private: int) -> bytes:
    return keypair_from_private(private).public


@lru_cache(maxsize=8192)
def _load_public(public: bytes) -> ec.EllipticCurvePublicKey:
    return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, public)


def is_valid_public_key(public: bytes) -> bool:
    if len(public) != PUBLIC_KEY_SIZE:
        return False
    try:
        _load_public(bytes(public))
    except ValueError:
        return False
    return True


def _as_key(private: Union[KeyPair, int]) -> ec.EllipticCurvePrivateKey:
    if isinstance(private, KeyPair):
        return private.key
    if not isinstance(private, int) or not 0 < private < ORDER:
        raise ValueError("private scalar out of range")
    return ec.derive_private_key(private, CURVE)


def sign_unnormalized(private: Union[KeyPair, int], payload: bytes) -> Signature:
    """Plain RFC 6979 ECDSA output, before low-s normalisation."""
    der = _as_key(private).sign(payload, _ECDSA)
    return Signature(*decode_dss_signature(der))


def sign(private: Union[KeyPair, int], payload: bytes) -> Signature:
    r, s = sign_unnormalized(private, payload)
    if s > HALF_ORDER:
        s = ORDER - s
    return Signature(r, s)


def verify(public: bytes, payload: bytes, sig: Union[Signature, bytes]) -> bool:
    """Total: malformed keys or signatures simply return False."""
    try:
        if not isinstance(sig, Signature):
            sig = Signature.from_bytes(bytes(sig))
        r, s = sig
        if not (0 < r < ORDER and 0 < s <= HALF_ORDER):
            return False
        if len(public) != PUBLIC_KEY_SIZE:
            return False
        key = _load_public(bytes(public))
        key.verify(encode_dss_signature(r, s), payload, _ECDSA)
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


def digest(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()


def hash_concat(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


# -- key files -----------------------------------------------------------------

def save_private_key(path, keypair: KeyPair) -> None:
    pem = keypair.key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )
    with open(path, "wb") as fh:
        fh.write(pem)


def load_private_key(path) -> KeyPair:
    with open(path, "rb") as fh:
        key = serialization.load_pem_private_key(fh.read(), password=None)
    if not isinstance(key, ec.EllipticCurvePrivateKey) or key.curve.name != CURVE.name:
        raise ValueError(f"{path}: not a P-256 private key")
    return _wrap(key)
