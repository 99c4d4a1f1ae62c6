import dataclasses
import hashlib

import pytest
from cryptography.hazmat.primitives import hashes
from hypothesis import given, strategies as st

from merkle_pseudonym import CLASSICAL_256, PQ_384, get_suite
from merkle_pseudonym.errors import EntropyUnavailable, KeyLengthError, UnknownSuite
from merkle_pseudonym import suite as suite_mod

SUITES = [CLASSICAL_256, PQ_384]


def test_sha256_empty_string_vector():
    assert CLASSICAL_256.hash(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )


def test_sha384_matches_second_implementation():
    # OpenSSL via the cryptography package, not hashlib
    h = hashes.Hash(hashes.SHA384())
    h.update(b"\x00")
    assert PQ_384.hash(b"\x00") == h.finalize()
    assert len(PQ_384.hash(b"\x00")) == 48


def test_suite_parameters():
    assert (CLASSICAL_256.suite_id, CLASSICAL_256.digest_len, CLASSICAL_256.key_len) == ("mp-sha256", 32, 32)
    assert (PQ_384.suite_id, PQ_384.digest_len, PQ_384.key_len) == ("mp-sha384", 48, 32)
    assert get_suite("mp-sha384") is PQ_384
    with pytest.raises(UnknownSuite):
        get_suite("mp-md5")


def test_short_key_len_rejected():
    with pytest.raises(ValueError):
        dataclasses.replace(CLASSICAL_256, key_len=8)


# RFC 4231 test cases 1 and 4. Those keys are 20 and 25 bytes, so the
# suites are re-parameterised to that key length; the MAC path is the same.
RFC4231 = [
    (b"\x0b" * 20, b"Hi There",
     "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
     "afd03944d84895626b0825f4ab46907f15f9dadbe4101ec682aa034c7cebc59c"
     "faea9ea9076ede7f4af152e8b2fa9cb6"),
    (bytes(range(1, 26)), b"\xcd" * 50,
     "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b",
     "3e8a69b7783c25851933ab6290af6ca77a9981480850009cc5577c6e1f573b4e"
     "6801dd23c4a7d679ccf8a386c674cffb"),
]


@pytest.mark.parametrize("key,data,want256,want384", RFC4231)
def test_hmac_rfc4231_vectors(key, data, want256, want384):
    s256 = dataclasses.replace(CLASSICAL_256, key_len=len(key))
    s384 = dataclasses.replace(PQ_384, key_len=len(key))
    assert s256.mac(key, data).hex() == want256
    assert s384.mac(key, data).hex() == want384


@pytest.mark.parametrize("suite", SUITES)
def test_mac_rejects_wrong_key_length(suite):
    with pytest.raises(KeyLengthError):
        suite.mac(b"\x00" * 31, b"data")
    with pytest.raises(KeyLengthError):
        suite.mac(b"\x00" * 33, b"data")


@pytest.mark.parametrize("suite", SUITES)
def test_random_keys_distinct_and_usable(suite):
    keys = [suite.random_key() for _ in range(1000)]
    assert len(set(keys)) == 1000
    assert all(len(k) == suite.key_len for k in keys)
    assert len(suite.mac(keys[0], b"x")) == suite.digest_len


@pytest.mark.parametrize("suite", SUITES)
def test_distinct_keys_give_distinct_macs(suite):
    data = b"same data"
    for _ in range(1000):
        k1, k2 = suite.random_key(), suite.random_key()
        assert suite.mac(k1, data) != suite.mac(k2, data)


def test_entropy_failure_is_reported(monkeypatch):
    def broken(n):
        raise OSError("no entropy")

    monkeypatch.setattr(suite_mod.secrets, "token_bytes", broken)
    with pytest.raises(EntropyUnavailable):
        CLASSICAL_256.random_key()


@given(st.binary(max_size=512), st.sampled_from(SUITES))
def test_hash_and_mac_are_pure(data, suite):
    key = b"k" * suite.key_len
    assert suite.hash(data) == suite.hash(data) == hashlib.new(suite.hash_name, data).digest()
    assert suite.mac(key, data) == suite.mac(key, data)
    assert len(suite.hash(data)) == len(suite.mac(key, data)) == suite.digest_len


def test_function_aliases():
    key = CLASSICAL_256.random_key()
    assert suite_mod.hash(CLASSICAL_256, b"a") == CLASSICAL_256.hash(b"a")
    assert suite_mod.mac(CLASSICAL_256, key, b"a") == CLASSICAL_256.mac(key, b"a")
    assert len(suite_mod.random_key(PQ_384)) == 32
