"""Declarative scenario files and a deterministic runner with leakage audit.

Scenario schema (JSON)::

    {
      "name": "...",
      "suite": "mp-sha256",
      "orgs": [{"id": "university", "attributes": {"alice": {"annual_income": 12000}}}],
      "subjects": [{"handle": "alice",
                    "identifiers": {"university": {"domain": "...", "attributes": [...]}}}],
      "steps": [{"op": "...", "id": "optional-name", ...}]
    }

Each subject's identifier for an org is, by assumption, already known to
that org. Supported step ops:

    pseudonym        subject, label, orgs (identifier order), key (hex, optional)
    register         subject, org, pseudonym (label), [using (org id) | index]
    cross_prove      subject, org, pseudonym, [using | index]
    threshold_query  asker, answerer, subject, pseudonym, attribute, threshold
    share_attribute  from, to, subject, pseudonym, attribute
    delete_attribute org, subject, attribute
    lookup           org, subject, pseudonym, attribute
    expect           step (id of an earlier step), status, [reason], [value]
    expect_view      org, [contains], [excludes]
    expect_state     org, subject, attribute, present (bool)

The transcript is a list of JSON objects, one per message, written as
JSON lines. Without an explicit "key" a pseudonym step draws a random key
and the transcript is no longer byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from ..errors import IdentifierError, KeyLengthError, ScenarioError
from ..identifiers import Identifier, encode
from ..proof import serialize_proof
from ..suite import HashSuite, get_suite
from ..tree import Pseudonym
from .registry import (
    ACCEPTED,
    REFUSED,
    REJECTED,
    OrgRegistry,
    Outcome,
    UserAgent,
    accept_link,
    register,
    threshold_query,
)

HARNESS = "harness"
BUNDLED = ("university_income", "pay_how_you_drive")
MIN_NEEDLE = 4


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class ScenarioResult:
    name: str
    transcript: list[dict[str, Any]]
    outcomes: dict[str, Outcome]
    expectations: list[tuple[int, bool, str]]
    leaks: list[str]
    orgs: dict[str, OrgRegistry] = field(repr=False)
    users: dict[str, UserAgent] = field(repr=False)

    @property
    def ok(self) -> bool:
        return not self.leaks and all(passed for _, passed, _ in self.expectations)

    def jsonl(self) -> str:
        return "".join(canonical(entry) + "\n" for entry in self.transcript)

    def view(self, org_id: str) -> list[dict[str, Any]]:
        return [e for e in self.transcript if org_id in (e["from"], e["to"])]

    def view_bytes(self, org_id: str) -> bytes:
        return "".join(canonical(e) + "\n" for e in self.view(org_id)).encode("utf-8")


def load_scenario(source: str | Path) -> dict[str, Any]:
    """Read a scenario from a path, or by name from the bundled set."""
    if isinstance(source, str) and source in BUNDLED:
        text = resources.files(__package__).joinpath("scenarios", f"{source}.json").read_text("utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None


def _pseudonym_obj(p: Pseudonym) -> dict[str, Any]:
    return json.loads(p.to_json())


class _Runner:
    def __init__(self, scenario: dict[str, Any]):
        if not isinstance(scenario, dict):
            raise ScenarioError("scenario must be a JSON object")
        self.name = str(scenario.get("name", "unnamed"))
        try:
            self.suite: HashSuite = get_suite(scenario.get("suite", "mp-sha256"))
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
        self.orgs: dict[str, OrgRegistry] = {}
        self.users: dict[str, UserAgent] = {}
        self.keys: list[bytes] = []
        self.transcript: list[dict[str, Any]] = []
        self.outcomes: dict[str, Outcome] = {}
        self.expectations: list[tuple[int, bool, str]] = []
        self.step = -1
        self._declare(scenario)
        self.steps = scenario.get("steps", [])
        if not isinstance(self.steps, list):
            raise ScenarioError("steps must be a list")

    # declarations

    def _declare(self, scenario: dict[str, Any]) -> None:
        for org in scenario.get("orgs", []):
            org_id = org.get("id")
            if not isinstance(org_id, str) or org_id in self.orgs or org_id == HARNESS:
                raise ScenarioError(f"bad or duplicate org id {org_id!r}")
            attrs = org.get("attributes", {})
            self.orgs[org_id] = OrgRegistry(org_id, attributes={s: dict(a) for s, a in attrs.items()})
        for subj in scenario.get("subjects", []):
            handle = subj.get("handle")
            if not isinstance(handle, str) or handle in self.users or handle in self.orgs:
                raise ScenarioError(f"bad or duplicate subject handle {handle!r}")
            ids = {}
            for org_id, obj in subj.get("identifiers", {}).items():
                if org_id not in self.orgs:
                    raise ScenarioError(f"subject {handle!r} references unknown org {org_id!r}")
                try:
                    ids[org_id] = Identifier.from_json_obj(obj)
                except (IdentifierError, TypeError) as exc:
                    raise ScenarioError(f"subject {handle!r}: {exc}") from None
                self.orgs[org_id].known_identifiers[handle] = ids[org_id]
            self.users[handle] = UserAgent(handle, ids)
        for org in self.orgs.values():
            for subject in org.attributes:
                if subject not in self.users:
                    raise ScenarioError(f"org {org.org_id!r} has attributes for unknown subject {subject!r}")

    # helpers

    def fail(self, message: str) -> ScenarioError:
        return ScenarioError(message, self.step)

    def field(self, step: dict[str, Any], name: str, kind: type = str) -> Any:
        if name not in step:
            raise self.fail(f"missing field {name!r}")
        value = step[name]
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            raise self.fail(f"field {name!r} must be {kind.__name__}")
        return value

    def org(self, step: dict[str, Any], name: str) -> OrgRegistry:
        org_id = self.field(step, name)
        if org_id not in self.orgs:
            raise self.fail(f"unknown org {org_id!r}")
        return self.orgs[org_id]

    def user(self, step: dict[str, Any]) -> UserAgent:
        handle = self.field(step, "subject")
        if handle not in self.users:
            raise self.fail(f"unknown subject {handle!r}")
        return self.users[handle]

    def pseudonym(self, user: UserAgent, step: dict[str, Any]) -> Pseudonym:
        label = self.field(step, "pseudonym")
        if label not in user.trees:
            raise self.fail(f"subject {user.handle!r} has no pseudonym {label!r}")
        return user.trees[label].pseudonym()

    def emit(self, sender: str, recipient: str, kind: str, body: dict[str, Any]) -> None:
        self.transcript.append({
            "seq": len(self.transcript),
            "step": self.step,
            "from": sender,
            "to": recipient,
            "kind": kind,
            "body": body,
        })

    def record(self, step: dict[str, Any], outcome: Outcome) -> Outcome:
        if "id" in step:
            self.outcomes[str(step["id"])] = outcome
        self.outcomes[str(self.step)] = outcome
        return outcome

    def _proof_for(self, user: UserAgent, org: OrgRegistry, pseudonym: Pseudonym, step: dict[str, Any]):
        if "index" in step:
            index = self.field(step, "index", int)
        elif "using" in step:
            using = self.field(step, "using")
            if using not in user.identifiers:
                raise self.fail(f"subject {user.handle!r} has no identifier for {using!r}")
            tree = user.tree_for(pseudonym)
            if user.identifiers[using] not in tree.identifiers:
                raise self.fail(f"pseudonym {step['pseudonym']!r} does not cover {using!r}")
            index = tree.index_of(user.identifiers[using])
        else:
            index = None
        try:
            return user.prove_to(org.org_id, pseudonym, index)
        except (LookupError, KeyError) as exc:
            raise self.fail(f"cannot build proof: {exc}") from None

    # ops

    def op_pseudonym(self, step: dict[str, Any]) -> None:
        user = self.user(step)
        label = self.field(step, "label")
        org_ids = self.field(step, "orgs", list)
        missing = [o for o in org_ids if o not in user.identifiers]
        if missing or not org_ids:
            raise self.fail(f"subject {user.handle!r} lacks identifiers for {missing}")
        if "key" in step:
            try:
                key = bytes.fromhex(self.field(step, "key"))
            except ValueError:
                raise self.fail("key must be hex") from None
        else:
            key = self.suite.random_key()
        self.keys.append(key)
        try:
            pseudonym = user.new_pseudonym(label, org_ids, key, self.suite)
        except (KeyLengthError, ValueError) as exc:
            raise self.fail(str(exc)) from None
        self.emit(user.handle, user.handle, "pseudonym_created",
                  {"label": label, "pseudonym": _pseudonym_obj(pseudonym)})
        self.record(step, Outcome(ACCEPTED))

    def op_register(self, step: dict[str, Any]) -> None:
        user, org = self.user(step), self.org(step, "org")
        pseudonym = self.pseudonym(user, step)
        proof = self._proof_for(user, org, pseudonym, step)
        self.emit(user.handle, org.org_id, "register", {
            "pseudonym": _pseudonym_obj(pseudonym),
            "proof": json.loads(serialize_proof(proof)),
        })
        outcome = self.record(step, register(org, user.handle, pseudonym, proof))
        self.emit(org.org_id, user.handle, "register_result", outcome.to_json_obj())

    def op_cross_prove(self, step: dict[str, Any]) -> None:
        user, org = self.user(step), self.org(step, "org")
        pseudonym = self.pseudonym(user, step)
        proof = self._proof_for(user, org, pseudonym, step)
        self.emit(user.handle, org.org_id, "ownership_proof", {
            "pseudonym": _pseudonym_obj(pseudonym),
            "proof": json.loads(serialize_proof(proof)),
        })
        outcome = self.record(step, accept_link(org, user.handle, pseudonym, proof))
        self.emit(org.org_id, user.handle, "ownership_result", outcome.to_json_obj())

    def op_threshold_query(self, step: dict[str, Any]) -> None:
        asker, answerer = self.org(step, "asker"), self.org(step, "answerer")
        pseudonym = self.pseudonym(self.user(step), step)
        attribute = self.field(step, "attribute")
        threshold = self.field(step, "threshold", int)
        self.emit(asker.org_id, answerer.org_id, "threshold_query", {
            "pseudonym": _pseudonym_obj(pseudonym), "attribute": attribute, "threshold": threshold,
        })
        outcome = self.record(step, threshold_query(asker, answerer, pseudonym, attribute, threshold))
        self.emit(answerer.org_id, asker.org_id, "threshold_answer", outcome.to_json_obj())

    def op_share_attribute(self, step: dict[str, Any]) -> None:
        sender, recipient = self.org(step, "from"), self.org(step, "to")
        pseudonym = self.pseudonym(self.user(step), step)
        attribute = self.field(step, "attribute")
        subject = sender.registered_pseudonyms.get(pseudonym)
        if subject is None:
            self.record(step, Outcome(REFUSED, "unknown_pseudonym"))
            return
        if attribute not in sender.attributes.get(subject, {}):
            self.record(step, Outcome(REFUSED, "unknown_attribute"))
            return
        value = sender.attributes[subject][attribute]
        recipient.received.setdefault(pseudonym, {})[attribute] = value
        self.emit(sender.org_id, recipient.org_id, "pseudonymised_data", {
            "pseudonym": _pseudonym_obj(pseudonym), "attribute": attribute, "value": value,
        })
        self.record(step, Outcome(ACCEPTED))

    def op_delete_attribute(self, step: dict[str, Any]) -> None:
        org, user = self.org(step, "org"), self.user(step)
        attribute = self.field(step, "attribute")
        removed = org.attributes.get(user.handle, {}).pop(attribute, None) is not None
        self.record(step, Outcome(ACCEPTED) if removed else Outcome(REFUSED, "unknown_attribute"))

    def op_lookup(self, step: dict[str, Any]) -> None:
        org, user = self.org(step, "org"), self.user(step)
        pseudonym = self.pseudonym(user, step)
        attribute = self.field(step, "attribute")
        subject = org.subject_for(pseudonym)
        data = org.received.get(pseudonym, {})
        if subject is None:
            outcome = Outcome(REFUSED, "unlinked_pseudonym")
        elif attribute not in data:
            outcome = Outcome(REFUSED, "unknown_attribute")
        else:
            outcome = Outcome(ACCEPTED, value=data[attribute])
            self.emit(org.org_id, org.org_id, "linked_record",
                      {"subject": subject, "attribute": attribute, "value": data[attribute]})
        self.record(step, outcome)

    def op_expect(self, step: dict[str, Any]) -> None:
        if "step" not in step:
            raise self.fail("missing field 'step'")
        ref = str(step["step"])
        if ref not in self.outcomes:
            raise self.fail(f"expect refers to unknown step {ref!r}")
        got = self.outcomes[ref]
        want = {k: step[k] for k in ("status", "reason", "value") if k in step}
        passed = all(getattr(got, k) == v for k, v in want.items())
        self._expectation(passed, f"step {ref}: expected {canonical(want)}, got {canonical(got.to_json_obj())}")

    def op_expect_view(self, step: dict[str, Any]) -> None:
        org = self.org(step, "org")
        view = "".join(canonical(e) for e in self.transcript if org.org_id in (e["from"], e["to"]))
        for needle in step.get("contains", []):
            self._expectation(needle in view, f"{org.org_id} view contains {needle!r}")
        for needle in step.get("excludes", []):
            self._expectation(needle not in view, f"{org.org_id} view excludes {needle!r}")

    def op_expect_state(self, step: dict[str, Any]) -> None:
        org, user = self.org(step, "org"), self.user(step)
        attribute = self.field(step, "attribute")
        present = self.field(step, "present", bool)
        holds = attribute in org.attributes.get(user.handle, {})
        self._expectation(holds == present,
                          f"{org.org_id} {'holds' if present else 'does not hold'} {attribute!r} of {user.handle}")

    def _expectation(self, passed: bool, message: str) -> None:
        self.expectations.append((self.step, passed, message))
        self.emit(HARNESS, HARNESS, "expectation", {"passed": passed, "check": message})

    # driver

    def run(self) -> ScenarioResult:
        for self.step, step in enumerate(self.steps):
            if not isinstance(step, dict) or not isinstance(step.get("op"), str):
                raise self.fail("step must be an object with an 'op' string")
            handler = getattr(self, "op_" + step["op"], None)
            if handler is None:
                raise self.fail(f"unknown op {step['op']!r}")
            handler(step)
        leaks = audit(self.transcript, self.orgs, self.users, self.keys, self.suite)
        return ScenarioResult(self.name, self.transcript, self.outcomes, self.expectations, leaks,
                              self.orgs, self.users)


def run_scenario(scenario: dict[str, Any] | str | Path) -> ScenarioResult:
    if not isinstance(scenario, dict):
        scenario = load_scenario(scenario)
    return _Runner(scenario).run()


def _identifier_needles(identifier: Identifier, suite: HashSuite) -> list[bytes]:
    enc = encode(identifier)
    needles = [enc, enc.hex().encode(), suite.hash(enc).hex().encode()]
    needles += [a for a in identifier.attributes if len(a) >= MIN_NEEDLE]
    return needles


def audit(transcript: list[dict[str, Any]], orgs: dict[str, OrgRegistry], users: dict[str, UserAgent],
          keys: list[bytes], suite: HashSuite) -> list[str]:
    """Byte-search every organisation's view for material it must not see.

    Forbidden: identifiers the org does not already hold (raw encoding, its
    hex, its hash, and attribute values of at least four bytes) and any
    user key.
    """
    findings = []
    for org in orgs.values():
        view = "".join(canonical(e) + "\n" for e in transcript if org.org_id in (e["from"], e["to"]))
        blob = view.encode("utf-8")
        own = set(org.known_identifiers.values())
        for user in users.values():
            for org_id, identifier in user.identifiers.items():
                if identifier in own:
                    continue
                for needle in _identifier_needles(identifier, suite):
                    if needle in blob:
                        findings.append(f"{org.org_id} sees identifier of {user.handle}@{org_id}")
                        break
        for key in keys:
            if key in blob or key.hex().encode() in blob:
                findings.append(f"{org.org_id} sees a user key")
    return findings


def common_pseudonyms(orgs: dict[str, OrgRegistry]) -> list[tuple[str, Pseudonym]]:
    """(subject, pseudonym) pairs held for the same subject by two or more orgs."""
    seen: dict[tuple[str, Pseudonym], str] = {}
    shared = []
    for org in orgs.values():
        for p, subject in list(org.registered_pseudonyms.items()) + list(org.linked_pseudonyms.items()):
            if (subject, p) in seen and seen[(subject, p)] != org.org_id:
                shared.append((subject, p))
            seen.setdefault((subject, p), org.org_id)
    return shared


__all__ = [
    "ScenarioResult", "run_scenario", "load_scenario", "audit", "common_pseudonyms",
    "ACCEPTED", "REJECTED", "REFUSED", "BUNDLED",
]
