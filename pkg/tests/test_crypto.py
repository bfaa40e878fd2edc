import hashlib

import pytest
from hypothesis import given, settings, strategies as st

from vpki import crypto

from . import oracles

RFC_X = 0xC9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721
RFC_UX = 0x60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6
RFC_UY = 0x7903FE1008B8BC99A41AE9E95628BC64F2F1B20C2D7E9F5177A3C294D4462299
SAMPLE = (0xEFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716,
          0xF7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8)
TEST = (0xF1ABB023518351CD71D881567B1EA663ED3EFCF6C5132B354F28D3B0B7D38367,
        0x019F4113742A2B14BD25926B49C649155F267E60D3814B4C0CC84250E46F0083)


def test_sha256_known_answers():
    assert crypto.digest(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert crypto.digest(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    two_block = b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"
    assert crypto.digest(two_block).hex() == "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"


def test_hash_concat_is_plain_concatenation():
    assert crypto.hash_concat(b"a", b"bc", b"") == hashlib.sha256(b"abc").digest()


def test_public_key_matches_published_point():
    pub = crypto.public_from_private(RFC_X)
    assert pub == bytes([2 + (RFC_UY & 1)]) + RFC_UX.to_bytes(32, "big")


def test_deterministic_signature_sample():
    assert tuple(crypto.sign_unnormalized(RFC_X, b"sample")) == SAMPLE
    # published s is in the upper half; the canonical form is n - s
    r, s = crypto.sign(RFC_X, b"sample")
    assert (r, s) == (SAMPLE[0], crypto.ORDER - SAMPLE[1])


def test_deterministic_signature_test():
    assert tuple(crypto.sign(RFC_X, b"test")) == TEST


def test_signatures_verify_and_reject_tampering():
    kp = crypto.generate_keypair()
    sig = crypto.sign(kp, b"payload")
    assert crypto.verify(kp.public, b"payload", sig)
    assert not crypto.verify(kp.public, b"payloaD", sig)
    assert not crypto.verify(crypto.generate_keypair().public, b"payload", sig)


def test_high_s_rejected():
    r, s = crypto.sign(RFC_X, b"x")
    pub = crypto.public_from_private(RFC_X)
    assert not crypto.verify(pub, b"x", crypto.Signature(r, crypto.ORDER - s))


@pytest.mark.parametrize("bad", [b"", b"\x02" + b"\x00" * 31, b"\x05" + b"\x11" * 32, b"\x04" + b"\x00" * 64])
def test_verify_is_total_on_malformed_keys(bad):
    assert crypto.verify(bad, b"m", crypto.Signature(1, 1)) is False
    assert not crypto.is_valid_public_key(bad)


def test_verify_rejects_out_of_range_scalars():
    pub = crypto.public_from_private(RFC_X)
    for r, s in [(0, 1), (1, 0), (crypto.ORDER, 1), (1, crypto.ORDER)]:
        assert not crypto.verify(pub, b"m", crypto.Signature(r, s))
    assert not crypto.verify(pub, b"m", b"\x00" * 63)


def test_signature_bytes_round_trip():
    sig = crypto.sign(RFC_X, b"abc")
    assert crypto.Signature.from_bytes(sig.to_bytes()) == sig
    assert len(sig.to_bytes()) == crypto.SIGNATURE_SIZE


def test_private_key_pem_round_trip(tmp_path):
    kp = crypto.generate_keypair()
    crypto.save_private_key(tmp_path / "k.pem", kp)
    assert crypto.load_private_key(tmp_path / "k.pem") == kp


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=oracles.N - 1), st.binary(max_size=64))
def test_signing_agrees_with_reference_implementation(x, msg):
    ours = crypto.sign(x, msg)
    assert tuple(ours) == oracles.ecdsa_sign(x, msg)
    assert crypto.public_from_private(x) == oracles.compress(oracles.mul(x))
    assert oracles.ecdsa_verify(crypto.public_from_private(x), msg, *ours)


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=128))
def test_sign_verify_round_trip(msg):
    kp = crypto.keypair_from_private(RFC_X)
    sig = crypto.sign(kp, msg)
    assert sig.s <= crypto.HALF_ORDER
    assert crypto.verify(kp.public, msg, sig)
