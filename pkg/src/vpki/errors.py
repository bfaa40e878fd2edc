"""Exception hierarchy shared by the services, the client and the tooling.

Every protocol rejection carries a stable ``code`` string.  The code is what
travels on the wire inside an error response, so the client can surface the
server's verdict unchanged.
"""

from __future__ import annotations


class VpkiError(Exception):
    code = "VpkiError"


# -- codec -------------------------------------------------------------------

class CodecError(VpkiError):
    code = "Malformed"


class Truncated(CodecError):
    code = "Truncated"


class TrailingBytes(CodecError):
    code = "TrailingBytes"


class UnknownVersion(CodecError):
    code = "UnknownVersion"


class UnknownMsgType(CodecError):
    code = "UnknownMsgType"


class FieldTooLong(CodecError):
    code = "FieldTooLong"


# -- server-side rejections ----------------------------------------------------

class ProtocolError(VpkiError):
    """A request was well-formed but refused by an authority."""

    code = "ProtocolError"


class DuplicateRegistration(ProtocolError):
    code = "DuplicateRegistration"


class UnknownVehicle(ProtocolError):
    code = "UnknownVehicle"


class ExpiredLtc(ProtocolError):
    code = "ExpiredLtc"


class BadSignature(ProtocolError):
    code = "BadSignature"


class StaleTimestamp(ProtocolError):
    code = "StaleTimestamp"


class InvalidWindow(ProtocolError):
    code = "InvalidWindow"


class UnknownSerial(ProtocolError):
    code = "UnknownSerial"


class Unauthorized(ProtocolError):
    code = "Unauthorized"


class UntrustedIssuer(ProtocolError):
    code = "UntrustedIssuer"


class ExpiredTicket(ProtocolError):
    code = "ExpiredTicket"


class TicketAlreadyUsed(ExpiredTicket):
    code = "TicketAlreadyUsed"


class CommitmentMismatch(ProtocolError):
    code = "CommitmentMismatch"


class IntervalMismatch(ProtocolError):
    code = "IntervalMismatch"


class PopFailure(ProtocolError):
    code = "PopFailure"

    def __init__(self, index: int):
        super().__init__(f"proof-of-possession failed for key {index}")
        self.index = index


class KeyCountMismatch(ProtocolError):
    code = "KeyCountMismatch"

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} keys, got {got}")
        self.expected = expected
        self.got = got


class NoUsefulSlices(ProtocolError):
    code = "NoUsefulSlices"


class UnsupportedRequest(ProtocolError):
    code = "UnsupportedRequest"


# -- client side ---------------------------------------------------------------

class ClientError(VpkiError):
    code = "ClientError"


class ProtocolViolation(ClientError):
    code = "ProtocolViolation"


class ValidationFailure(ClientError):
    code = "ValidationFailure"


class PoolExhausted(ClientError):
    code = "PoolExhausted"


class RemoteError(ClientError):
    """An authority answered with an error response; ``code`` is the server's."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


class TransportError(ClientError):
    code = "TransportError"


# -- resolution ----------------------------------------------------------------

class ChainMismatch(VpkiError):
    code = "ChainMismatch"

    def __init__(self, link: str, result=None):
        super().__init__(f"identifiable-key chain broken at {link}")
        self.link = link
        self.result = result


# -- traces and benchmarking -----------------------------------------------------

class TraceError(VpkiError):
    code = "TraceError"


class MalformedRow(TraceError):
    code = "MalformedRow"

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class UnsortedInput(TraceError):
    code = "UnsortedInput"


class EmptyTrace(TraceError):
    code = "EmptyTrace"


class EmptyInput(VpkiError):
    code = "EmptyInput"


class BenchAborted(VpkiError):
    code = "BenchAborted"
