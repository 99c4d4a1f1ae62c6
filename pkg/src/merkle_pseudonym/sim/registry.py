"""In-process organisations and users exchanging pseudonyms and proofs.

Messages between a user and an organisation are assumed to travel over an
authenticated channel: the organisation learns the true subject handle of
whoever registers, which is what stops an outsider who merely knows an
identifier from registering a pseudonym of their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from ..identifiers import Identifier
from ..proof import OwnershipProof, prove, verify
from ..suite import HashSuite, get_suite
from ..tree import Pseudonym, PseudonymTree, build_tree

ACCEPTED = "accepted"
REJECTED = "rejected"
REFUSED = "refused"
ABOVE = "above"
AT_OR_BELOW = "at_or_below"


@dataclass(frozen=True)
class Outcome:
    status: str
    reason: str | None = None
    value: Any = None

    @property
    def ok(self) -> bool:
        return self.status not in (REJECTED, REFUSED)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"status": self.status}
        if self.reason is not None:
            obj["reason"] = self.reason
        if self.value is not None:
            obj["value"] = self.value
        return obj

    def __str__(self) -> str:
        return f"{self.status}({self.reason})" if self.reason else self.status


@dataclass
class OrgRegistry:
    org_id: str
    known_identifiers: dict[str, Identifier] = field(default_factory=dict)
    attributes: dict[str, dict[str, Any]] = field(default_factory=dict)
    registered_pseudonyms: dict[Pseudonym, str] = field(default_factory=dict)
    # foreign pseudonyms a subject proved ownership of
    linked_pseudonyms: dict[Pseudonym, str] = field(default_factory=dict)
    # pseudonymised data pushed by other organisations, keyed by pseudonym
    received: dict[Pseudonym, dict[str, Any]] = field(default_factory=dict)
    accepted_proofs: dict[Pseudonym, OwnershipProof] = field(default_factory=dict)

    def subject_for(self, pseudonym: Pseudonym) -> str | None:
        return self.registered_pseudonyms.get(pseudonym) or self.linked_pseudonyms.get(pseudonym)

    def pseudonyms_of(self, subject: str) -> set[Pseudonym]:
        held = {p for p, s in self.registered_pseudonyms.items() if s == subject}
        held |= {p for p, s in self.linked_pseudonyms.items() if s == subject}
        return held

    def _check(self, subject: str, pseudonym: Pseudonym, proof: OwnershipProof) -> Outcome | None:
        identifier = self.known_identifiers.get(subject)
        if identifier is None:
            return Outcome(REJECTED, "unknown_subject")
        verdict = verify(pseudonym, identifier, proof)
        if not verdict:
            return Outcome(REJECTED, "bad_proof")
        return None


def register(org: OrgRegistry, subject: str, pseudonym: Pseudonym, proof: OwnershipProof) -> Outcome:
    """Bind ``pseudonym`` to ``subject`` after checking the proof against the
    identifier this organisation already holds for that subject."""
    if pseudonym in org.registered_pseudonyms:
        return Outcome(REJECTED, "already_registered")
    failure = org._check(subject, pseudonym, proof)
    if failure:
        return failure
    org.registered_pseudonyms[pseudonym] = subject
    org.accepted_proofs[pseudonym] = proof
    return Outcome(ACCEPTED)


@dataclass
class UserAgent:
    """The user's side: identifiers per organisation plus their private trees."""

    handle: str
    identifiers: dict[str, Identifier]
    trees: dict[str, PseudonymTree] = field(default_factory=dict)

    def new_pseudonym(self, label: str, org_ids: Sequence[str], key: bytes,
                      suite: HashSuite | str = "mp-sha256") -> Pseudonym:
        ids = [self.identifiers[o] for o in org_ids]
        tree = build_tree(get_suite(suite), key, ids)
        self.trees[label] = tree
        return tree.pseudonym()

    def tree_for(self, pseudonym: Pseudonym) -> PseudonymTree:
        for tree in self.trees.values():
            if tree.pseudonym() == pseudonym:
                return tree
        raise LookupError(f"{self.handle} holds no tree for {pseudonym}")

    def prove_to(self, org_id: str, pseudonym: Pseudonym, index: int | None = None) -> OwnershipProof:
        """Proof for the identifier ``org_id`` knows, or for an explicit index."""
        tree = self.tree_for(pseudonym)
        if index is None:
            index = tree.index_of(self.identifiers[org_id])
        return prove(tree, index)


def cross_prove(user: UserAgent, target_org: OrgRegistry, foreign_pseudonym: Pseudonym,
                index: int | None = None) -> Outcome:
    """Let ``target_org`` link a pseudonym issued for another organisation.

    The user presents the authentication path of the target organisation's
    own identifier; nothing about the other identifiers is revealed.
    """
    try:
        proof = user.prove_to(target_org.org_id, foreign_pseudonym, index)
    except (LookupError, KeyError):
        return Outcome(REJECTED, "bad_proof")
    return accept_link(target_org, user.handle, foreign_pseudonym, proof)


def accept_link(org: OrgRegistry, subject: str, pseudonym: Pseudonym, proof: OwnershipProof) -> Outcome:
    failure = org._check(subject, pseudonym, proof)
    if failure:
        return failure
    if pseudonym not in org.registered_pseudonyms:
        org.linked_pseudonyms[pseudonym] = subject
    org.accepted_proofs.setdefault(pseudonym, proof)
    return Outcome(ACCEPTED)


def threshold_query(asking_org: OrgRegistry, answering_org: OrgRegistry, pseudonym: Pseudonym,
                    attribute: str, threshold: int) -> Outcome:
    """One bit about a numeric attribute: strictly above ``threshold`` or not."""
    subject = answering_org.registered_pseudonyms.get(pseudonym)
    if subject is None:
        return Outcome(REFUSED, "unknown_pseudonym")
    value = answering_org.attributes.get(subject, {}).get(attribute)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return Outcome(REFUSED, "unknown_attribute")
    return Outcome(ABOVE if value > threshold else AT_OR_BELOW)
