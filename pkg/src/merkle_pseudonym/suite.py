"""Hash suites: the collision-resistant hash and the keyed hash used by trees.

Two fixed parameter sets are supported:

    mp-sha256  SHA-256 / HMAC-SHA-256, 32-byte digests (classical security)
    mp-sha384  SHA-384 / HMAC-SHA-384, 48-byte digests (post-quantum margin)

Both use 32-byte MAC keys.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass

from .errors import EntropyUnavailable, KeyLengthError, UnknownSuite

MIN_KEY_LEN = 16
DEFAULT_KEY_LEN = 32


@dataclass(frozen=True)
class HashSuite:
    suite_id: str
    hash_name: str
    digest_len: int
    key_len: int = DEFAULT_KEY_LEN

    def __post_init__(self) -> None:
        if self.key_len < MIN_KEY_LEN:
            raise ValueError(f"key_len must be at least {MIN_KEY_LEN} bytes")
        if hashlib.new(self.hash_name).digest_size != self.digest_len:
            raise ValueError(f"{self.hash_name} does not produce {self.digest_len}-byte digests")

    def hash(self, data: bytes) -> bytes:
        return hashlib.new(self.hash_name, data).digest()

    def mac(self, key: bytes, data: bytes) -> bytes:
        if len(key) != self.key_len:
            raise KeyLengthError(f"{self.suite_id} needs a {self.key_len}-byte key, got {len(key)}")
        return hmac.new(key, data, self.hash_name).digest()

    def random_key(self) -> bytes:
        try:
            return secrets.token_bytes(self.key_len)
        except (OSError, NotImplementedError) as exc:
            raise EntropyUnavailable("OS randomness source failed") from exc


CLASSICAL_256 = HashSuite("mp-sha256", "sha256", 32)
PQ_384 = HashSuite("mp-sha384", "sha384", 48)

SUITES: dict[str, HashSuite] = {s.suite_id: s for s in (CLASSICAL_256, PQ_384)}
DEFAULT_SUITE = CLASSICAL_256


def get_suite(suite_id: str | HashSuite) -> HashSuite:
    """Look up a suite by its wire token (``"mp-sha256"`` or ``"mp-sha384"``)."""
    if isinstance(suite_id, HashSuite):
        return suite_id
    try:
        return SUITES[suite_id]
    except (KeyError, TypeError):
        raise UnknownSuite(f"unknown suite {suite_id!r}; expected one of {sorted(SUITES)}") from None


# Function-style aliases mirroring the method API.

def hash(suite: HashSuite, data: bytes) -> bytes:  # noqa: A001
    return suite.hash(data)


def mac(suite: HashSuite, key: bytes, data: bytes) -> bytes:
    return suite.mac(key, data)


def random_key(suite: HashSuite) -> bytes:
    return suite.random_key()
