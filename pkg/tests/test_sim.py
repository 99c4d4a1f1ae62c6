import json
from pathlib import Path

import pytest

import oracle
from merkle_pseudonym import CLASSICAL_256, Identifier, build_tree, prove
from merkle_pseudonym.errors import ScenarioError
from merkle_pseudonym.sim import (
    ABOVE,
    ACCEPTED,
    AT_OR_BELOW,
    OrgRegistry,
    UserAgent,
    common_pseudonyms,
    cross_prove,
    load_scenario,
    register,
    run_scenario,
    threshold_query,
)
from merkle_pseudonym.proof import verify

GOLDEN = Path(__file__).parent / "golden"

STUDENT = Identifier("edu.university.students", ["Alice", "Papadopoulou", "STU-2019-04417"])
VAT = Identifier("gov.finance.vat", ["VAT-EL-104839221"])


@pytest.fixture
def world():
    univ = OrgRegistry("university", {"alice": STUDENT})
    fin = OrgRegistry("finance", {"alice": VAT}, attributes={"alice": {"annual_income": 12000}})
    alice = UserAgent("alice", {"university": STUDENT, "finance": VAT})
    return univ, fin, alice


def test_register_and_replay(world):
    univ, fin, alice = world
    p = alice.new_pseudonym("P2", ["university", "finance"], CLASSICAL_256.random_key())
    out = register(fin, "alice", p, alice.prove_to("finance", p))
    assert out.status == ACCEPTED
    assert fin.registered_pseudonyms[p] == "alice"
    replay = register(fin, "alice", p, alice.prove_to("finance", p))
    assert (replay.status, replay.reason) == ("rejected", "already_registered")


def test_register_unknown_subject(world):
    univ, fin, alice = world
    p = alice.new_pseudonym("P", ["finance"], CLASSICAL_256.random_key())
    out = register(fin, "mallory", p, alice.prove_to("finance", p))
    assert out.reason == "unknown_subject"


def test_register_tree_without_org_identifier(world):
    univ, fin, alice = world
    # tree built only over the student number; finance cannot recompute anything from it
    p = alice.new_pseudonym("P", ["university"], CLASSICAL_256.random_key())
    proof = alice.prove_to("university", p)
    assert not verify(p, VAT, proof)
    assert register(fin, "alice", p, proof).reason == "bad_proof"


def test_outsider_who_knows_identifier_cannot_register_for_victim(world):
    _, fin, _ = world
    # an attacker who knows the VAT number builds its own tree, but the
    # authenticated channel tags the attacker's own handle
    fake = build_tree(CLASSICAL_256, CLASSICAL_256.random_key(), [VAT])
    assert register(fin, "mallory", fake.pseudonym(), prove(fake, 0)).reason == "unknown_subject"


def test_cross_prove_and_threshold(world):
    univ, fin, alice = world
    p2 = alice.new_pseudonym("P2", ["university", "finance"], CLASSICAL_256.random_key())
    assert register(fin, "alice", p2, alice.prove_to("finance", p2)).ok
    # VAT-side path given to the university fails: it cannot compute H(VAT)
    assert cross_prove(alice, univ, p2, index=1).reason == "bad_proof"
    assert cross_prove(alice, univ, p2).status == ACCEPTED
    assert univ.linked_pseudonyms[p2] == "alice"
    assert threshold_query(univ, fin, p2, "annual_income", 10000).status == ABOVE
    assert threshold_query(univ, fin, p2, "annual_income", 12000).status == AT_OR_BELOW
    assert threshold_query(univ, fin, p2, "annual_income", 11999).status == ABOVE
    assert threshold_query(univ, fin, p2, "salary", 1).reason == "unknown_attribute"
    other = alice.new_pseudonym("P9", ["finance"], CLASSICAL_256.random_key())
    assert threshold_query(univ, fin, other, "annual_income", 1).reason == "unknown_pseudonym"


def test_cross_prove_own_org_matches_register_check(world):
    _, fin, alice = world
    p = alice.new_pseudonym("P2", ["university", "finance"], CLASSICAL_256.random_key())
    assert cross_prove(alice, fin, p).status == ACCEPTED
    assert cross_prove(alice, fin, p, index=0).reason == "bad_proof"


def test_cross_prove_unknown_pseudonym(world):
    univ, _, alice = world
    stranger = build_tree(CLASSICAL_256, CLASSICAL_256.random_key(), [STUDENT]).pseudonym()
    assert cross_prove(alice, univ, stranger).reason == "bad_proof"


@pytest.mark.parametrize("name", ["university_income", "pay_how_you_drive"])
def test_bundled_scenarios_golden(name):
    first = run_scenario(name)
    assert first.ok, (first.leaks, [m for _, p, m in first.expectations if not p])
    assert first.jsonl() == run_scenario(name).jsonl()
    assert first.jsonl() == (GOLDEN / f"{name}.jsonl").read_text(encoding="utf-8")


@pytest.mark.parametrize("name", ["university_income", "pay_how_you_drive"])
def test_transcript_roots_match_oracle(name):
    scenario = load_scenario(name)
    subjects = {s["handle"]: s["identifiers"] for s in scenario["subjects"]}
    result = run_scenario(name)
    created = [e for e in result.transcript if e["kind"] == "pseudonym_created"]
    steps = [s for s in scenario["steps"] if s["op"] == "pseudonym"]
    assert len(created) == len(steps)
    for entry, step in zip(created, steps):
        ids = [(subjects[step["subject"]][o]["domain"], subjects[step["subject"]][o]["attributes"])
               for o in step["orgs"]]
        want = oracle.tree_root("mp-sha256", bytes.fromhex(step["key"]), ids)
        assert entry["body"]["pseudonym"]["root"] == want.hex()


def test_pay_how_you_drive_views():
    result = run_scenario("pay_how_you_drive")
    insurer = result.view_bytes("insurer")
    assert b'"value":87' in insurer
    for trip_detail in (b"T-0001", b"Kifissias", b"max_speed_kmh"):
        assert trip_detail not in insurer
    assert b"DEV-7f3c9e21-44b0" not in insurer
    assert b"CUST-558201" not in result.view_bytes("collector")
    assert "trips" not in result.orgs["collector"].attributes["carol"]
    assert result.outcomes["score-lookup"].value == 87


def test_university_sees_one_bit():
    result = run_scenario("university_income")
    view = result.view_bytes("university")
    assert b"12000" not in view
    assert b"VAT-EL" not in view
    answers = [e["body"]["status"] for e in result.view("university") if e["kind"] == "threshold_answer"]
    assert answers == ["above", "at_or_below", "refused"]


def test_registration_soundness():
    for name in ("university_income", "pay_how_you_drive"):
        result = run_scenario(name)
        for org in result.orgs.values():
            for p, subject in org.registered_pseudonyms.items():
                assert verify(p, org.known_identifiers[subject], org.accepted_proofs[p])


def _without_cross_prove(name):
    scenario = load_scenario(name)
    scenario["steps"] = [s for s in scenario["steps"]
                         if s["op"] in ("pseudonym", "register", "share_attribute", "delete_attribute")]
    return scenario


@pytest.mark.parametrize("name", ["university_income", "pay_how_you_drive"])
def test_no_common_pseudonym_without_cross_prove(name):
    result = run_scenario(_without_cross_prove(name))
    assert common_pseudonyms(result.orgs) == []
    assert result.leaks == []


def test_cross_prove_creates_consented_link():
    result = run_scenario("university_income")
    shared = common_pseudonyms(result.orgs)
    assert {s for s, _ in shared} == {"alice", "bob"}


def test_empty_scenario():
    result = run_scenario({"orgs": [], "subjects": [], "steps": []})
    assert result.transcript == [] and result.jsonl() == "" and result.ok


def test_failed_expectation_reported():
    scenario = load_scenario("pay_how_you_drive")
    scenario["steps"].append({"op": "expect", "step": "score-lookup", "value": 12})
    result = run_scenario(scenario)
    assert not result.ok
    assert sum(1 for _, p, _ in result.expectations if not p) == 1


def test_audit_catches_leaked_identifier():
    scenario = load_scenario("pay_how_you_drive")
    # the collector would now push its device identifier attribute to the insurer
    scenario["orgs"][1]["attributes"]["carol"]["device"] = "DEV-7f3c9e21-44b0"
    scenario["steps"].insert(3, {"op": "share_attribute", "from": "collector", "to": "insurer",
                                 "subject": "carol", "pseudonym": "P2", "attribute": "device"})
    result = run_scenario(scenario)
    assert any("insurer sees identifier of carol@collector" in leak for leak in result.leaks)


def test_random_key_when_unspecified():
    scenario = load_scenario("pay_how_you_drive")
    del scenario["steps"][0]["key"]
    a, b = run_scenario(scenario), run_scenario(scenario)
    assert a.ok and b.ok and a.jsonl() != b.jsonl()


@pytest.mark.parametrize("step,fragment", [
    ({"op": "fly"}, "unknown op"),
    ({"op": "register", "subject": "carol", "org": "nowhere", "pseudonym": "P2"}, "unknown org"),
    ({"op": "register", "subject": "dave", "org": "insurer", "pseudonym": "P2"}, "unknown subject"),
    ({"op": "register", "subject": "carol", "org": "insurer", "pseudonym": "P7"}, "no pseudonym"),
    ({"op": "expect", "step": "nope", "status": "accepted"}, "unknown step"),
    ({"op": "threshold_query", "asker": "insurer", "answerer": "collector", "subject": "carol",
      "pseudonym": "P2", "attribute": "score", "threshold": "high"}, "must be int"),
    ("not an object", "must be an object"),
])
def test_scenario_errors_carry_step_index(step, fragment):
    scenario = load_scenario("pay_how_you_drive")
    scenario["steps"] = scenario["steps"][:1] + [step]
    with pytest.raises(ScenarioError, match=fragment) as info:
        run_scenario(scenario)
    assert info.value.step == 1


def test_bad_declarations(tmp_path):
    with pytest.raises(ScenarioError):
        run_scenario({"orgs": [{"id": "a"}, {"id": "a"}]})
    with pytest.raises(ScenarioError):
        run_scenario({"orgs": [{"id": "a"}], "subjects": [{"handle": "x", "identifiers": {"b": {}}}]})
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ScenarioError):
        run_scenario(str(bad))
    with pytest.raises(ScenarioError):
        run_scenario(str(tmp_path / "missing.json"))


def test_scenario_file_path(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(load_scenario("university_income")))
    assert run_scenario(path).jsonl() == (GOLDEN / "university_income.jsonl").read_text()
