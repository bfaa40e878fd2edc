"""Canonical binary encoding for every protocol message.

Layout of an encoded message::

    version:u8 | msg_type:u8 | body

The body is the message's fields in declaration order.  Integers are fixed
width big-endian, variable byte strings and text carry a u16 length prefix,
lists a u16 element count, and fixed-size values (digests, compressed keys,
signatures, nonces) are written raw.  Nested messages are inlined without
their own header.  Signed structures keep the signature as their final field,
which makes :func:`signed_payload` a prefix of :func:`encode`.

Message classes are frozen dataclasses whose fields are declared with
:func:`wire`; they register themselves with :func:`message`.
"""

from __future__ import annotations

import dataclasses
import struct
from typing import Any, Callable, ClassVar, Dict, Tuple, Type, TypeVar

from .crypto import SIGNATURE_SIZE, Signature
from .errors import (
    CodecError,
    FieldTooLong,
    TrailingBytes,
    Truncated,
    UnknownMsgType,
    UnknownVersion,
)

VERSION = 1
MAX_LEN = 0xFFFF


class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise Truncated(f"need {n} bytes at offset {self.pos}, have {len(self.buf) - self.pos}")
        out = self.buf[self.pos:end]
        self.pos = end
        return out


class Kind:
    """A wire encoding for one field value."""

    def encode(self, value: Any, out: bytearray) -> None:
        raise NotImplementedError

    def decode(self, rd: _Reader) -> Any:
        raise NotImplementedError


class _Uint(Kind):
    def __init__(self, fmt: str, bits: int):
        self.st = struct.Struct(">" + fmt)
        self.limit = 1 << bits

    def encode(self, value: int, out: bytearray) -> None:
        if not isinstance(value, int) or not 0 <= value < self.limit:
            raise CodecError(f"integer {value!r} out of range for u{self.limit.bit_length() - 1}")
        out += self.st.pack(value)

    def decode(self, rd: _Reader) -> int:
        return self.st.unpack(rd.take(self.st.size))[0]


U8 = _Uint("B", 8)
U16 = _Uint("H", 16)
U32 = _Uint("I", 32)
U64 = _Uint("Q", 64)


class Fixed(Kind):
    def __init__(self, size: int):
        self.size = size

    def encode(self, value: bytes, out: bytearray) -> None:
        if len(value) != self.size:
            raise CodecError(f"expected {self.size} bytes, got {len(value)}")
        out += value

    def decode(self, rd: _Reader) -> bytes:
        return bytes(rd.take(self.size))


class _Bytes(Kind):
    def encode(self, value: bytes, out: bytearray) -> None:
        if len(value) > MAX_LEN:
            raise FieldTooLong(f"{len(value)} bytes exceeds u16 length prefix")
        out += U16.st.pack(len(value))
        out += value

    def decode(self, rd: _Reader) -> bytes:
        return bytes(rd.take(U16.decode(rd)))


class _Text(_Bytes):
    def encode(self, value: str, out: bytearray) -> None:
        super().encode(value.encode("utf-8"), out)

    def decode(self, rd: _Reader) -> str:
        raw = super().decode(rd)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError(f"invalid utf-8 text field: {exc}") from None


class _Sig(Kind):
    def encode(self, value: Signature, out: bytearray) -> None:
        out += value.to_bytes()

    def decode(self, rd: _Reader) -> Signature:
        return Signature.from_bytes(rd.take(SIGNATURE_SIZE))


BYTES = _Bytes()
TEXT = _Text()
SIG = _Sig()
DIGEST = Fixed(32)
PUBKEY = Fixed(33)
RANDOM = Fixed(32)


class Nested(Kind):
    def __init__(self, cls: type):
        self.cls = cls

    def encode(self, value: Any, out: bytearray) -> None:
        if not isinstance(value, self.cls):
            raise CodecError(f"expected {self.cls.__name__}, got {type(value).__name__}")
        _encode_body(value, out)

    def decode(self, rd: _Reader) -> Any:
        return _decode_body(self.cls, rd)


class ListOf(Kind):
    def __init__(self, item: Kind):
        self.item = item

    def encode(self, value, out: bytearray) -> None:
        if len(value) > MAX_LEN:
            raise FieldTooLong(f"{len(value)} elements exceeds u16 count prefix")
        out += U16.st.pack(len(value))
        for v in value:
            self.item.encode(v, out)

    def decode(self, rd: _Reader) -> tuple:
        n = U16.decode(rd)
        return tuple(self.item.decode(rd) for _ in range(n))


def wire(kind: Kind, **kw) -> Any:
    """Declare a dataclass field together with its wire encoding."""
    return dataclasses.field(metadata={"wire": kind}, **kw)


# -- registry --------------------------------------------------------------------

_BY_TYPE: Dict[int, type] = {}
_SCHEMA: Dict[type, Tuple[Tuple[str, Kind], ...]] = {}

M = TypeVar("M")


def message(msg_type: int) -> Callable[[Type[M]], Type[M]]:
    def register(cls: Type[M]) -> Type[M]:
        if msg_type in _BY_TYPE:
            raise ValueError(f"msg_type {msg_type} already registered to {_BY_TYPE[msg_type].__name__}")
        schema = tuple((f.name, f.metadata["wire"]) for f in dataclasses.fields(cls))
        cls.MSG_TYPE = msg_type  # type: ignore[attr-defined]
        _BY_TYPE[msg_type] = cls
        _SCHEMA[cls] = schema
        return cls

    return register


def message_types() -> Dict[int, type]:
    return dict(_BY_TYPE)


def _schema(cls: type) -> Tuple[Tuple[str, Kind], ...]:
    try:
        return _SCHEMA[cls]
    except KeyError:
        raise CodecError(f"{cls.__name__} is not a registered message") from None


def _encode_body(msg: Any, out: bytearray, skip_last: bool = False) -> None:
    schema = _schema(type(msg))
    if skip_last:
        schema = schema[:-1]
    for name, kind in schema:
        kind.encode(getattr(msg, name), out)


def _decode_body(cls: type, rd: _Reader) -> Any:
    return cls(**{name: kind.decode(rd) for name, kind in _schema(cls)})


def encode(msg: Any) -> bytes:
    out = bytearray((VERSION, type(msg).MSG_TYPE))
    _encode_body(msg, out)
    return bytes(out)


def decode(data: bytes, expect: type | None = None) -> Any:
    """Parse one complete message.  Only :class:`CodecError` escapes."""
    if len(data) < 2:
        raise Truncated("missing message header")
    if data[0] != VERSION:
        raise UnknownVersion(f"version {data[0]}")
    cls = _BY_TYPE.get(data[1])
    if cls is None:
        raise UnknownMsgType(f"msg_type {data[1]}")
    if expect is not None and cls is not expect:
        raise CodecError(f"expected {expect.__name__}, got {cls.__name__}")
    rd = _Reader(bytes(data))
    rd.pos = 2
    try:
        msg = _decode_body(cls, rd)
    except CodecError:
        raise
    except (ValueError, TypeError, struct.error) as exc:
        raise CodecError(str(exc)) from None
    if rd.pos != len(data):
        raise TrailingBytes(f"{len(data) - rd.pos} bytes after {cls.__name__}")
    return msg


def is_signed(cls: type) -> bool:
    schema = _schema(cls)
    return bool(schema) and schema[-1][0] == "signature" and schema[-1][1] is SIG


def signed_payload(msg: Any) -> bytes:
    """Header plus every body field except the trailing signature."""
    if not is_signed(type(msg)):
        raise CodecError(f"{type(msg).__name__} carries no signature")
    out = bytearray((VERSION, type(msg).MSG_TYPE))
    _encode_body(msg, out, skip_last=True)
    return bytes(out)


class Signed:
    """Mixin for messages whose last field is ``signature``."""

    signature: Signature
    MSG_TYPE: ClassVar[int]

    def payload(self) -> bytes:
        return signed_payload(self)
