"""Canonical byte encoding of composite identifiers.

Layout (all integers big-endian)::

    0x01                         version
    u16 len, bytes               domain label (UTF-8)
    u8 count                     number of attributes (1..255)
    (u16 len, bytes) * count     attributes (1..65535 bytes each)

Length prefixes make the encoding injective, unlike raw concatenation
("AB" + "C" == "A" + "BC"). Attribute bytes are hashed verbatim: callers
are responsible for any case or whitespace normalisation.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any, Iterable

from .errors import (
    AttributeTooLong,
    EmptyAttribute,
    IdentifierError,
    MalformedEncoding,
    TooManyAttributes,
)

VERSION = 0x01
MAX_ATTRIBUTES = 255
MAX_FIELD_LEN = 0xFFFF


def _as_bytes(value: bytes | str) -> bytes:
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value)
    raise TypeError(f"attribute must be str or bytes, not {type(value).__name__}")


@dataclass(frozen=True)
class Identifier:
    """An ordered attribute list identifying a person inside one organisation.

    ``Identifier("org.univ", ["Alice", "Smith", "S-1234"])`` stands for
    first_name || last_name || student number in the "org.univ" context.
    Strings are stored as their UTF-8 bytes.
    """

    domain: str
    attributes: tuple[bytes, ...]

    def __init__(self, domain: str, attributes: Iterable[bytes | str]):
        if not isinstance(domain, str):
            raise TypeError("domain label must be a str")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "attributes", tuple(_as_bytes(a) for a in attributes))
        self.validate()

    def validate(self) -> None:
        if len(self.domain.encode("utf-8")) > MAX_FIELD_LEN:
            raise AttributeTooLong("domain label exceeds 65535 bytes")
        if not self.attributes:
            raise EmptyAttribute("identifier needs at least one attribute")
        if len(self.attributes) > MAX_ATTRIBUTES:
            raise TooManyAttributes(f"{len(self.attributes)} attributes, at most {MAX_ATTRIBUTES} allowed")
        for i, attr in enumerate(self.attributes):
            if not attr:
                raise EmptyAttribute(f"attribute {i} is empty")
            if len(attr) > MAX_FIELD_LEN:
                raise AttributeTooLong(f"attribute {i} is {len(attr)} bytes, at most {MAX_FIELD_LEN} allowed")

    def encode(self) -> bytes:
        return encode(self)

    def to_json_obj(self) -> dict[str, Any]:
        try:
            attrs = [a.decode("utf-8") for a in self.attributes]
        except UnicodeDecodeError:
            raise IdentifierError("attribute is not valid UTF-8; no JSON form") from None
        return {"domain": self.domain, "attributes": attrs}

    @classmethod
    def from_json_obj(cls, obj: Any) -> "Identifier":
        if not isinstance(obj, dict) or set(obj) != {"domain", "attributes"}:
            raise IdentifierError('identifier must be an object {"domain": ..., "attributes": [...]}')
        attrs = obj["attributes"]
        if not isinstance(obj["domain"], str) or not isinstance(attrs, list):
            raise IdentifierError("domain must be a string and attributes a list")
        if not all(isinstance(a, str) for a in attrs):
            raise IdentifierError("attributes must be strings")
        return cls(obj["domain"], attrs)

    @classmethod
    def parse(cls, text: str, domain: str, delimiter: str = "|") -> "Identifier":
        """Split a delimited string such as ``"Alice|Smith|S-1234"``."""
        if not delimiter:
            raise ValueError("delimiter must be non-empty")
        return cls(domain, text.split(delimiter))

    def __repr__(self) -> str:
        return f"Identifier({self.domain!r}, {list(self.attributes)!r})"


def encode(identifier: Identifier) -> bytes:
    identifier.validate()
    label = identifier.domain.encode("utf-8")
    parts = [struct.pack(">BH", VERSION, len(label)), label, struct.pack(">B", len(identifier.attributes))]
    for attr in identifier.attributes:
        parts.append(struct.pack(">H", len(attr)))
        parts.append(attr)
    return b"".join(parts)


def decode(data: bytes) -> Identifier:
    data = bytes(data)
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise MalformedEncoding(f"truncated {what} at offset {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(1, "version")[0] != VERSION:
        raise MalformedEncoding("unsupported version byte")
    (label_len,) = struct.unpack(">H", take(2, "label length"))
    try:
        domain = take(label_len, "domain label").decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedEncoding("domain label is not UTF-8") from None
    count = take(1, "attribute count")[0]
    if count == 0:
        raise MalformedEncoding("attribute count is zero")
    attrs = []
    for i in range(count):
        (n,) = struct.unpack(">H", take(2, f"attribute {i} length"))
        if n == 0:
            raise MalformedEncoding(f"attribute {i} is empty")
        attrs.append(take(n, f"attribute {i}"))
    if pos != len(data):
        raise MalformedEncoding(f"{len(data) - pos} trailing bytes")
    return Identifier(domain, attrs)


def load_identifiers(text: str) -> list[Identifier]:
    """Parse an ids-file: a JSON array of identifier objects, order preserved."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IdentifierError(f"ids file is not valid JSON: {exc}") from None
    if not isinstance(obj, list) or not obj:
        raise IdentifierError("ids file must be a non-empty JSON array")
    return [Identifier.from_json_obj(o) for o in obj]


def dump_identifiers(identifiers: Iterable[Identifier]) -> str:
    return json.dumps([i.to_json_obj() for i in identifiers], indent=2, ensure_ascii=False) + "\n"
