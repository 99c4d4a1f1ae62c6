"""Ownership proofs: convincing an organisation that a pseudonym covers an
identifier it already holds, while revealing only digests.

The verifier hashes the identifier itself, so a proof is only useful to a
party that already knows that identifier.
"""

from __future__ import annotations

import hmac
import json
from dataclasses import dataclass

from .errors import MalformedProof
from .identifiers import Identifier, encode
from .suite import SUITES, get_suite
from .tree import (
    LEFT,
    RIGHT,
    Pseudonym,
    PseudonymTree,
    auth_path,
    is_power_of_two,
    is_strict_int,
    load_strict_json,
    parse_hex_digest,
)

SUITE_MISMATCH = "suite_mismatch"
LENGTH_MISMATCH = "length_mismatch"
ROOT_MISMATCH = "root_mismatch"

PROOF_EXTENSION = ".mproof"


@dataclass(frozen=True)
class OwnershipProof:
    suite_id: str
    leaf_count: int
    identifier_index: int
    path: tuple[tuple[str, bytes], ...]

    @property
    def digest_bytes(self) -> int:
        """Size of the digest material carried by the path."""
        return sum(len(d) for _, d in self.path)

    def serialize(self) -> bytes:
        return serialize_proof(self)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        return "accept" if self.accepted else f"reject: {self.reason}"


ACCEPT = Verdict(True)


def prove(tree: PseudonymTree, identifier_index: int) -> OwnershipProof:
    path = auth_path(tree, identifier_index)
    return OwnershipProof(tree.suite.suite_id, tree.leaf_count, identifier_index, tuple(path))


def expected_sides(identifier_index: int, height: int) -> list[str]:
    """Sibling sides implied by the leaf pair position of an identifier."""
    sides = [RIGHT]
    pos = identifier_index
    for _ in range(height - 1):
        sides.append(LEFT if pos % 2 else RIGHT)
        pos //= 2
    return sides


def verify(pseudonym: Pseudonym, claimed_identifier: Identifier, proof: OwnershipProof) -> Verdict:
    """Check that ``proof`` links ``claimed_identifier`` to ``pseudonym``.

    All inputs are treated as untrusted; the result is a Verdict whose
    reason is one of suite_mismatch, length_mismatch or root_mismatch.
    """
    suite = SUITES.get(pseudonym.suite_id) if isinstance(pseudonym.suite_id, str) else None
    if suite is None or proof.suite_id != pseudonym.suite_id:
        return Verdict(False, SUITE_MISMATCH)

    leaves = proof.leaf_count
    if (
        not is_strict_int(leaves)
        or leaves != pseudonym.leaf_count
        or leaves < 2
        or not is_power_of_two(leaves)
        or len(pseudonym.root) != suite.digest_len
    ):
        return Verdict(False, LENGTH_MISMATCH)
    height = leaves.bit_length() - 1
    index = proof.identifier_index
    if (
        len(proof.path) != height
        or not is_strict_int(index)
        or not 0 <= index < leaves // 2
        or any(len(entry) != 2 or len(entry[1]) != suite.digest_len for entry in proof.path)
    ):
        return Verdict(False, LENGTH_MISMATCH)

    # A path whose sides disagree with its index is folded anyway so that
    # the rejection carries no more detail than a wrong digest would.
    consistent = [side for side, _ in proof.path] == expected_sides(index, height)
    digest = suite.hash(encode(claimed_identifier))
    for side, sibling in proof.path:
        if side == RIGHT:
            digest = suite.hash(digest + sibling)
        else:
            digest = suite.hash(sibling + digest)
    if hmac.compare_digest(digest, pseudonym.root) and consistent:
        return ACCEPT
    return Verdict(False, ROOT_MISMATCH)


def serialize_proof(proof: OwnershipProof) -> bytes:
    # Key order is fixed by construction; compact separators make the bytes canonical.
    obj = {
        "v": 1,
        "suite": proof.suite_id,
        "leaves": proof.leaf_count,
        "index": proof.identifier_index,
        "path": [{"dir": side, "h": digest.hex()} for side, digest in proof.path],
    }
    return json.dumps(obj, separators=(",", ":")).encode("ascii")


def parse_proof(data: bytes | str) -> OwnershipProof:
    try:
        obj = load_strict_json(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedProof(f"not valid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise MalformedProof("top level must be an object")
    expected = {"v", "suite", "leaves", "index", "path"}
    if set(obj) != expected:
        raise MalformedProof(f"keys must be exactly {sorted(expected)}", "$")

    if not is_strict_int(obj["v"]) or obj["v"] != 1:
        raise MalformedProof("unsupported version", "v")
    try:
        suite = get_suite(obj["suite"])
    except ValueError as exc:
        raise MalformedProof(str(exc), "suite") from None
    leaves = obj["leaves"]
    if not is_strict_int(leaves) or leaves < 2 or not is_power_of_two(leaves):
        raise MalformedProof("must be a power of two >= 2", "leaves")
    index = obj["index"]
    if not is_strict_int(index) or not 0 <= index < leaves // 2:
        raise MalformedProof(f"must be an integer in 0..{leaves // 2 - 1}", "index")
    raw_path = obj["path"]
    height = leaves.bit_length() - 1
    if not isinstance(raw_path, list) or len(raw_path) != height:
        raise MalformedProof(f"must be a list of {height} entries", "path")

    path = []
    for i, entry in enumerate(raw_path):
        where = f"path[{i}]"
        if not isinstance(entry, dict) or set(entry) != {"dir", "h"}:
            raise MalformedProof('entry must be {"dir": ..., "h": ...}', where)
        if entry["dir"] not in (LEFT, RIGHT):
            raise MalformedProof('must be "L" or "R"', where + ".dir")
        try:
            digest = parse_hex_digest(entry["h"], suite.digest_len)
        except ValueError as exc:
            raise MalformedProof(str(exc), where + ".h") from None
        path.append((entry["dir"], digest))
    return OwnershipProof(suite.suite_id, leaves, index, tuple(path))
