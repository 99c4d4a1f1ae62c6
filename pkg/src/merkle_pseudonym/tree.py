"""Keyed Merkle trees whose root is a user-generated pseudonym.

Every identifier occupies a pair of adjacent leaves::

    leaf[2j]     = H(encode(id_j))
    leaf[2j + 1] = H_k(encode(id_j))

and every inner node is ``H(left || right)``. When N identifiers do not
fill a power-of-two tree, the remaining leaves are keyed pad values so the
tree can be rebuilt from (key, identifiers) alone.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import DuplicateIdentifier, IndexOutOfRange, MalformedPseudonym
from .identifiers import Identifier, encode
from .suite import HashSuite, get_suite

LEFT = "L"
RIGHT = "R"

PAD_TAG = b"\x00pad"


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class LeafPlan:
    leaf_count: int
    identifier_slots: int

    @property
    def pad_slots(self) -> int:
        return self.leaf_count - 2 * self.identifier_slots

    @property
    def height(self) -> int:
        return self.leaf_count.bit_length() - 1


def plan_leaves(n_identifiers: int) -> LeafPlan:
    """Size the tree for ``n_identifiers`` identifiers.

    A power of two N gets exactly 2N leaves. Otherwise the smallest m with
    N < 2**m is chosen and the tree gets 2**(m+1) leaves.
    """
    if n_identifiers < 1:
        raise ValueError("need at least one identifier")
    if is_power_of_two(n_identifiers):
        return LeafPlan(2 * n_identifiers, n_identifiers)
    m = n_identifiers.bit_length()  # smallest m with N < 2**m
    return LeafPlan(2 ** (m + 1), n_identifiers)


def pad_leaf(suite: HashSuite, key: bytes, slot: int) -> bytes:
    # The 0x00 prefix never starts an encoded identifier (version byte 0x01).
    return suite.mac(key, PAD_TAG + struct.pack(">Q", slot))


@dataclass(frozen=True)
class Pseudonym:
    root: bytes
    suite_id: str
    leaf_count: int

    @property
    def height(self) -> int:
        return self.leaf_count.bit_length() - 1

    def to_json(self) -> str:
        return json.dumps(
            {"v": 1, "suite": self.suite_id, "leaves": self.leaf_count, "root": self.root.hex()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "Pseudonym":
        return parse_pseudonym(text)

    def __str__(self) -> str:
        return self.root.hex()


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise ValueError(f"duplicate key {k!r}")
        out[k] = v
    return out


def load_strict_json(text: str | bytes) -> Any:
    """``json.loads`` that refuses duplicate object keys and bad UTF-8."""
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8")
    return json.loads(text, object_pairs_hook=_reject_duplicate_keys)


def is_strict_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def parse_hex_digest(value: Any, digest_len: int) -> bytes:
    """Decode a lowercase hex digest of exactly ``digest_len`` bytes."""
    if not isinstance(value, str):
        raise ValueError("digest must be a hex string")
    if len(value) % 2:
        raise ValueError("odd-length hex")
    if len(value) != 2 * digest_len:
        raise ValueError(f"expected {digest_len}-byte digest, got {len(value) // 2} bytes")
    if value != value.lower() or any(c not in "0123456789abcdef" for c in value):
        raise ValueError("digest must be lowercase hex")
    return bytes.fromhex(value)


def parse_pseudonym(text: str | bytes) -> Pseudonym:
    try:
        obj = load_strict_json(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedPseudonym(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or set(obj) != {"v", "suite", "leaves", "root"}:
        raise MalformedPseudonym('expected keys "v", "suite", "leaves", "root"')
    if not is_strict_int(obj["v"]) or obj["v"] != 1:
        raise MalformedPseudonym("unsupported version")
    try:
        suite = get_suite(obj["suite"])
    except ValueError as exc:
        raise MalformedPseudonym(str(exc)) from None
    leaves = obj["leaves"]
    if not is_strict_int(leaves) or leaves < 2 or not is_power_of_two(leaves):
        raise MalformedPseudonym("leaves must be a power of two >= 2")
    try:
        root = parse_hex_digest(obj["root"], suite.digest_len)
    except ValueError as exc:
        raise MalformedPseudonym(f"root: {exc}") from None
    return Pseudonym(root, suite.suite_id, leaves)


@dataclass(frozen=True)
class PseudonymTree:
    """A fully built tree. Holds the secret key; never serialise it."""

    suite: HashSuite
    key: bytes = field(repr=False)
    identifiers: tuple[Identifier, ...]
    levels: tuple[tuple[bytes, ...], ...] = field(repr=False)

    @property
    def leaf_count(self) -> int:
        return len(self.levels[0])

    @property
    def height(self) -> int:
        return len(self.levels) - 1

    @property
    def root_digest(self) -> bytes:
        return self.levels[-1][0]

    def pseudonym(self) -> Pseudonym:
        return Pseudonym(self.root_digest, self.suite.suite_id, self.leaf_count)

    def index_of(self, identifier: Identifier) -> int:
        try:
            return self.identifiers.index(identifier)
        except ValueError:
            raise IndexOutOfRange(f"{identifier!r} is not part of this tree") from None

    def auth_path(self, identifier_index: int) -> list[tuple[str, bytes]]:
        return auth_path(self, identifier_index)


def build_tree(suite: HashSuite, key: bytes, identifiers: Sequence[Identifier]) -> PseudonymTree:
    suite = get_suite(suite)
    if not identifiers:
        raise ValueError("need at least one identifier")
    if len(key) != suite.key_len:
        suite.mac(key, b"")  # raises KeyLengthError
    encoded = [encode(i) for i in identifiers]
    if len(set(encoded)) != len(encoded):
        seen: set[bytes] = set()
        for ident, enc in zip(identifiers, encoded):
            if enc in seen:
                raise DuplicateIdentifier(f"{ident!r} occurs more than once")
            seen.add(enc)

    plan = plan_leaves(len(encoded))
    leaves: list[bytes] = []
    for enc in encoded:
        leaves.append(suite.hash(enc))
        leaves.append(suite.mac(key, enc))
    for slot in range(len(leaves), plan.leaf_count):
        leaves.append(pad_leaf(suite, key, slot))

    levels = [tuple(leaves)]
    level = leaves
    while len(level) > 1:
        level = [suite.hash(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(tuple(level))
    return PseudonymTree(suite, bytes(key), tuple(identifiers), tuple(levels))


def root(tree: PseudonymTree) -> Pseudonym:
    return tree.pseudonym()


def auth_path(tree: PseudonymTree, identifier_index: int) -> list[tuple[str, bytes]]:
    """Sibling digests from the leaf pair of ``identifier_index`` up to the root.

    Each entry is (side, digest), where side says whether the sibling goes
    on the left or right when the parent is recomputed. The first entry is
    always the identifier's own MAC leaf, on the right.
    """
    if not is_strict_int(identifier_index) or not 0 <= identifier_index < len(tree.identifiers):
        raise IndexOutOfRange(f"identifier index {identifier_index} outside 0..{len(tree.identifiers) - 1}")
    path = []
    pos = 2 * identifier_index
    for level in tree.levels[:-1]:
        if pos % 2 == 0:
            path.append((RIGHT, level[pos + 1]))
        else:
            path.append((LEFT, level[pos - 1]))
        pos //= 2
    return path
