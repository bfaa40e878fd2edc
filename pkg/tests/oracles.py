"""Independent reference implementations used to cross-check the package.

Nothing here imports the code under test.  The ECDSA code is textbook affine
arithmetic, far too slow for production but easy to audit.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import struct

# -- P-256 -------------------------------------------------------------------------

P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
A = P - 3
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
G = (0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
     0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5)


def _add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    if p[0] == q[0] and (p[1] + q[1]) % P == 0:
        return None
    if p == q:
        lam = (3 * p[0] * p[0] + A) * pow(2 * p[1], -1, P) % P
    else:
        lam = (q[1] - p[1]) * pow(q[0] - p[0], -1, P) % P
    x = (lam * lam - p[0] - q[0]) % P
    return x, (lam * (p[0] - x) - p[1]) % P


def mul(k: int, pt=G):
    out = None
    while k:
        if k & 1:
            out = _add(out, pt)
        pt = _add(pt, pt)
        k >>= 1
    return out


def compress(pt) -> bytes:
    return bytes([2 + (pt[1] & 1)]) + pt[0].to_bytes(32, "big")


def decompress(raw: bytes):
    x = int.from_bytes(raw[1:], "big")
    y = pow((x ** 3 + A * x + B) % P, (P + 1) // 4, P)
    if (y & 1) != (raw[0] & 1):
        y = P - y
    return x, y


def _bits2int(b: bytes) -> int:
    return int.from_bytes(b, "big")


def rfc6979_k(x: int, h1: bytes) -> int:
    """Deterministic nonce for SHA-256 on P-256 (RFC 6979 section 3.2)."""
    xb = x.to_bytes(32, "big")
    hb = (_bits2int(h1) % N).to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + xb + hb, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + xb + hb, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        cand = _bits2int(v)
        if 1 <= cand < N:
            return cand
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def ecdsa_sign(x: int, msg: bytes, low_s: bool = True):
    h = hashlib.sha256(msg).digest()
    e = _bits2int(h) % N
    k = rfc6979_k(x, h)
    r = mul(k)[0] % N
    s = pow(k, -1, N) * (e + r * x) % N
    if low_s and s > N // 2:
        s = N - s
    return r, s


def ecdsa_verify(pub: bytes, msg: bytes, r: int, s: int) -> bool:
    if not (0 < r < N and 0 < s < N):
        return False
    e = _bits2int(hashlib.sha256(msg).digest()) % N
    w = pow(s, -1, N)
    pt = _add(mul(e * w % N), mul(r * w % N, decompress(pub)))
    return pt is not None and pt[0] % N == r


# -- byte layouts -------------------------------------------------------------------

def u8(v):
    return struct.pack(">B", v)


def u16(v):
    return struct.pack(">H", v)


def u64(v):
    return struct.pack(">Q", v)


def text(s: str) -> bytes:
    b = s.encode("utf-8")
    return u16(len(b)) + b


def sig(r: int, s: int) -> bytes:
    return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def ltc_body(subject_id, public_key, valid_from, valid_to, issuer_id) -> bytes:
    return subject_id + public_key + u64(valid_from) + u64(valid_to) + text(issuer_id)


def ticket_body(serial, commitment, ik, t_s, t_e, exp) -> bytes:
    return u64(serial) + commitment + ik + u64(t_s) + u64(t_e) + u64(exp)


def header(msg_type: int) -> bytes:
    return u8(1) + u8(msg_type)


# -- policy counting ------------------------------------------------------------------

def grid_cells_touched(t_date: int, gamma: int, depart: int, end: int) -> int:
    """Count grid cells [t_date + k*gamma, t_date + (k+1)*gamma) meeting [depart, end) by enumeration."""
    k = (depart - t_date) // gamma - 2
    count = 0
    while t_date + k * gamma < end:
        lo, hi = t_date + k * gamma, t_date + (k + 1) * gamma
        if lo < end and depart < hi:
            count += 1
        k += 1
    return count


def p2_windows(depart: int, end: int, gamma: int) -> int:
    """Number of back-to-back Gamma windows from departure needed to reach the end, by walking."""
    n, t = 0, depart
    while t < end:
        n += 1
        t += gamma
    return n


def p3_slices(t_date: int, tau: int, window, now: int):
    """Every tau-grid slice of ``window`` still alive at ``now``, by enumerating instants."""
    t_s, t_e = window
    out = []
    t = t_s
    while t < t_e:
        start = t
        nxt = t_date + ((t - t_date) // tau + 1) * tau
        end = min(nxt, t_e)
        if end > now:
            out.append((start, end))
        t = end
    return out


# -- statistics ------------------------------------------------------------------------

def streaming_stats(xs):
    """Welford's single-pass mean/variance plus a sort-based nearest-rank p99."""
    n, mean, m2 = 0, 0.0, 0.0
    lo, hi = math.inf, -math.inf
    for x in xs:
        n += 1
        d = x - mean
        mean += d / n
        m2 += d * (x - mean)
        lo, hi = min(lo, x), max(hi, x)
    var = m2 / (n - 1) if n > 1 else 0.0
    ordered = sorted(xs)
    rank = math.ceil(0.99 * n - 1e-12)
    return {"count": n, "avg_ms": mean, "variance": var, "std_dev_ms": math.sqrt(var),
            "min_ms": lo, "max_ms": hi, "p99_ms": ordered[max(rank, 1) - 1]}
