"""On-disk custody of the per-pseudonym MAC keys.

The store is one JSON file mapping labels to records. Unless opened with
``encrypt=False`` every key is sealed with AES-256-GCM under a key derived
from a passphrase with scrypt; the scrypt parameters and salt live in the
file header. Losing the store (or the passphrase) makes the affected
pseudonyms unprovable; there is no recovery.
"""

from __future__ import annotations

import contextlib
import datetime as dt
import fcntl
import hashlib
import json
import logging
import os
import secrets
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import BadPassphrase, DuplicateLabel, StorageFailure, UnknownLabel
from .identifiers import Identifier, encode
from .suite import HashSuite, get_suite

log = logging.getLogger(__name__)

FORMAT = "merkle-pseudonym-keystore"
DEFAULT_PATH = Path("~/.merkle-pseudonym/keys.json")
ENV_PATH = "MP_KEYSTORE"

SCRYPT_N = 2**14
SCRYPT_R = 8
SCRYPT_P = 1


def default_path() -> Path:
    return Path(os.environ.get(ENV_PATH) or DEFAULT_PATH).expanduser()


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class KeyRecord:
    label: str
    suite_id: str
    key: bytes = field(repr=False)
    created_at: str
    identifier_fingerprints: tuple[bytes, ...] = ()

    @property
    def suite(self) -> HashSuite:
        return get_suite(self.suite_id)

    def matches(self, identifiers: Iterable[Identifier]) -> bool:
        """True when ``identifiers`` (in order) match the stored fingerprints."""
        return self.identifier_fingerprints == fingerprints(self.suite, identifiers)


def fingerprints(suite: HashSuite, identifiers: Iterable[Identifier]) -> tuple[bytes, ...]:
    return tuple(suite.hash(encode(i)) for i in identifiers)


class KeyStore:
    """A label -> KeyRecord map persisted to a single JSON file.

    Mutations hold an advisory ``flock`` on a sibling ``.lock`` file and
    replace the store atomically.
    """

    def __init__(self, path: str | os.PathLike | None = None, passphrase: str | None = None,
                 encrypt: bool = True):
        self.path = Path(path).expanduser() if path is not None else default_path()
        self._passphrase = passphrase
        self._encrypt = encrypt
        self._kdf: dict | None = None
        self._records: dict[str, dict] = {}
        self._wrapping_key: bytes | None = None
        self._load()

    # persistence

    def _load(self) -> None:
        if not self.path.exists():
            if self._encrypt:
                self._kdf = {"name": "scrypt", "salt": secrets.token_hex(16),
                             "n": SCRYPT_N, "r": SCRYPT_R, "p": SCRYPT_P}
            return
        try:
            doc = json.loads(self.path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise StorageFailure(f"cannot read keystore {self.path}: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != FORMAT or doc.get("v") != 1:
            raise StorageFailure(f"{self.path} is not a keystore file")
        self._kdf = doc.get("kdf")
        self._encrypt = self._kdf is not None
        records = doc.get("keys")
        if not isinstance(records, dict):
            raise StorageFailure(f"{self.path}: malformed keys section")
        self._records = records
        if self._encrypt and self._records and self._passphrase is not None:
            # Fail early on a wrong passphrase rather than at first use.
            self.get_key(next(iter(self._records)))

    def _document(self) -> dict:
        return {"format": FORMAT, "v": 1, "kdf": self._kdf, "keys": self._records}

    def _save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        data = json.dumps(self._document(), indent=2, sort_keys=False) + "\n"
        try:
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".keys-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.chmod(tmp, 0o600)
            os.replace(tmp, self.path)
        except OSError as exc:
            raise StorageFailure(f"cannot write keystore {self.path}: {exc}") from exc

    @contextlib.contextmanager
    def _locked(self) -> Iterator[None]:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        lock_path = self.path.with_name(self.path.name + ".lock")
        try:
            with open(lock_path, "a") as lock:
                fcntl.flock(lock, fcntl.LOCK_EX)
                try:
                    yield
                finally:
                    fcntl.flock(lock, fcntl.LOCK_UN)
        except OSError as exc:
            raise StorageFailure(f"cannot lock keystore: {exc}") from exc

    # key wrapping

    def _wrap_key(self) -> bytes:
        if self._wrapping_key is None:
            if self._passphrase is None:
                raise BadPassphrase("keystore is encrypted; a passphrase is required")
            kdf = self._kdf or {}
            try:
                self._wrapping_key = hashlib.scrypt(
                    self._passphrase.encode("utf-8"), salt=bytes.fromhex(kdf["salt"]),
                    n=kdf["n"], r=kdf["r"], p=kdf["p"], dklen=32,
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise StorageFailure(f"bad kdf header: {exc}") from exc
        return self._wrapping_key

    def _seal(self, label: str, suite_id: str, key: bytes) -> dict | str:
        if not self._encrypt:
            return key.hex()
        nonce = secrets.token_bytes(12)
        ct = AESGCM(self._wrap_key()).encrypt(nonce, key, f"{label}\x00{suite_id}".encode("utf-8"))
        return {"nonce": nonce.hex(), "ct": ct.hex()}

    def _unseal(self, label: str, suite_id: str, blob: dict | str) -> bytes:
        if isinstance(blob, str):
            if self._encrypt:
                raise StorageFailure(f"record {label!r} is unencrypted inside an encrypted store")
            return bytes.fromhex(blob)
        try:
            nonce, ct = bytes.fromhex(blob["nonce"]), bytes.fromhex(blob["ct"])
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageFailure(f"record {label!r} is corrupt") from exc
        try:
            return AESGCM(self._wrap_key()).decrypt(nonce, ct, f"{label}\x00{suite_id}".encode("utf-8"))
        except InvalidTag:
            raise BadPassphrase("wrong passphrase or tampered keystore") from None

    # public API

    @property
    def encrypted(self) -> bool:
        return self._encrypt

    def __contains__(self, label: str) -> bool:
        return label in self._records

    def __len__(self) -> int:
        return len(self._records)

    def create_key(self, label: str, suite: HashSuite | str = "mp-sha256",
                   identifiers: Iterable[Identifier] | None = None) -> KeyRecord:
        suite = get_suite(suite)
        with self._locked():
            self._reload_if_changed()
            if label in self._records:
                raise DuplicateLabel(f"label {label!r} already exists")
            key = suite.random_key()
            fps = fingerprints(suite, identifiers) if identifiers is not None else ()
            self._records[label] = {
                "suite": suite.suite_id,
                "created_at": _now(),
                "fingerprints": [f.hex() for f in fps],
                "key": self._seal(label, suite.suite_id, key),
            }
            self._save()
        log.info("created key %r (%s)", label, suite.suite_id)
        return self.get_key(label)

    def get_key(self, label: str) -> KeyRecord:
        try:
            rec = self._records[label]
        except KeyError:
            raise UnknownLabel(f"no key labelled {label!r}") from None
        try:
            suite = get_suite(rec["suite"])
            key = self._unseal(label, rec["suite"], rec["key"])
            fps = tuple(bytes.fromhex(f) for f in rec.get("fingerprints", []))
            created = rec["created_at"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageFailure(f"record {label!r} is corrupt: {exc}") from exc
        if len(key) != suite.key_len:
            raise StorageFailure(f"record {label!r} holds a key of the wrong length")
        return KeyRecord(label, suite.suite_id, key, created, fps)

    def set_fingerprints(self, label: str, identifiers: Iterable[Identifier]) -> KeyRecord:
        record = self.get_key(label)
        with self._locked():
            self._reload_if_changed()
            self._records[label]["fingerprints"] = [f.hex() for f in fingerprints(record.suite, identifiers)]
            self._save()
        return self.get_key(label)

    def delete_key(self, label: str) -> None:
        with self._locked():
            self._reload_if_changed()
            if label not in self._records:
                raise UnknownLabel(f"no key labelled {label!r}")
            del self._records[label]
            self._save()
        log.info("deleted key %r", label)

    def list_keys(self) -> list[tuple[str, str, str]]:
        return [(label, rec["suite"], rec["created_at"]) for label, rec in self._records.items()]

    def _reload_if_changed(self) -> None:
        if not self.path.exists():
            return
        try:
            doc = json.loads(self.path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise StorageFailure(f"cannot read keystore {self.path}: {exc}") from exc
        if doc.get("kdf") != self._kdf:
            raise StorageFailure("keystore header changed underneath us")
        self._records = doc.get("keys", {})
