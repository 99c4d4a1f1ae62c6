"""Command-line interface.

Exit codes: 0 success / accept, 1 reject (or failed scenario), 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import getpass
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bench import run_bench
from .errors import PseudonymError
from .identifiers import Identifier, load_identifiers
from .keystore import KeyStore
from .proof import parse_proof, prove, serialize_proof, verify
from .sim import run_scenario
from .suite import SUITES
from .tree import build_tree, parse_pseudonym

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_ERROR = 2

ENV_PASSPHRASE = "MP_PASSPHRASE"


class UsageError(Exception):
    pass


def _passphrase(args: argparse.Namespace) -> str | None:
    if args.no_encrypt:
        return None
    if os.environ.get(ENV_PASSPHRASE) is not None:
        return os.environ[ENV_PASSPHRASE]
    if sys.stdin.isatty():
        return getpass.getpass("keystore passphrase: ")
    raise UsageError(f"keystore passphrase needed: set {ENV_PASSPHRASE} or pass --no-encrypt")


def _open_store(args: argparse.Namespace) -> KeyStore:
    path = Path(args.keystore).expanduser() if args.keystore else None
    store = KeyStore(path, passphrase=None, encrypt=not args.no_encrypt)
    if store.encrypted:
        store = KeyStore(path, passphrase=_passphrase(args), encrypt=True)
    return store


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _write(path: str | None, data: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(data)
        return
    Path(path).write_text(data, encoding="utf-8")


def _tree_from_store(args: argparse.Namespace):
    store = _open_store(args)
    record = store.get_key(args.key_label)
    identifiers = load_identifiers(_read(args.ids_file))
    if record.identifier_fingerprints and not record.matches(identifiers):
        print(f"warning: identifier list differs from the one first used with key {args.key_label!r}; "
              "the resulting pseudonym will not match", file=sys.stderr)
    return store, record, build_tree(record.suite, record.key, identifiers)


def cmd_keygen(args: argparse.Namespace) -> int:
    store = _open_store(args)
    record = store.create_key(args.label, args.suite)
    print(f"created key {record.label!r} ({record.suite_id}) in {store.path}")
    return EXIT_OK


def cmd_keys(args: argparse.Namespace) -> int:
    store = _open_store(args)
    if args.keys_command == "delete":
        store.delete_key(args.label)
        print(f"deleted key {args.label!r}")
        return EXIT_OK
    for label, suite_id, created in store.list_keys():
        print(f"{label}\t{suite_id}\t{created}")
    return EXIT_OK


def cmd_pseudonym_new(args: argparse.Namespace) -> int:
    store, record, tree = _tree_from_store(args)
    if not record.identifier_fingerprints:
        store.set_fingerprints(record.label, tree.identifiers)
    _write(args.out, tree.pseudonym().to_json() + "\n")
    return EXIT_OK


def cmd_prove(args: argparse.Namespace) -> int:
    _, _, tree = _tree_from_store(args)
    proof = prove(tree, args.index)
    _write(args.out, serialize_proof(proof).decode("ascii") + "\n")
    return EXIT_OK


def _claimed_identifier(args: argparse.Namespace) -> Identifier:
    if args.id_json:
        try:
            obj = json.loads(_read(args.id_json))
        except json.JSONDecodeError as exc:
            raise UsageError(f"identifier file is not JSON: {exc}") from None
        return Identifier.from_json_obj(obj)
    if args.domain is None:
        raise UsageError("--id needs --domain")
    return Identifier.parse(args.id, args.domain, args.delimiter)


def cmd_verify(args: argparse.Namespace) -> int:
    pseudonym = parse_pseudonym(_read(args.pseudonym))
    identifier = _claimed_identifier(args)
    proof = parse_proof(_read(args.proof).encode("utf-8"))
    verdict = verify(pseudonym, identifier, proof)
    print(verdict)
    return EXIT_OK if verdict else EXIT_REJECT


def cmd_sim_run(args: argparse.Namespace) -> int:
    result = run_scenario(args.scenario)
    _write(args.transcript, result.jsonl())
    for step, passed, message in result.expectations:
        if not passed:
            print(f"FAILED expectation at step {step}: {message}", file=sys.stderr)
    for leak in result.leaks:
        print(f"LEAK: {leak}", file=sys.stderr)
    passed = sum(1 for _, ok, _ in result.expectations if ok)
    print(f"{result.name}: {passed}/{len(result.expectations)} expectations passed, "
          f"{len(result.leaks)} leaks", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_REJECT


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_bench(args.max_n, args.suite, args.repetitions)
    _write(args.out, report.to_csv() if args.format == "csv" else report.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="merkle-pseudonym",
        description="User-generated pseudonyms as roots of keyed Merkle trees.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--keystore", help="key store file (default: $MP_KEYSTORE or ~/.merkle-pseudonym/keys.json)")
    parser.add_argument("--no-encrypt", action="store_true",
                        help="keep keys unencrypted (new stores only; for testing)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    suites = sorted(SUITES)

    p = sub.add_parser("keygen", help="create a fresh secret key under a label")
    p.add_argument("--label", required=True)
    p.add_argument("--suite", choices=suites, default="mp-sha256")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("keys", help="list or delete stored keys")
    keys_sub = p.add_subparsers(dest="keys_command", required=True)
    keys_sub.add_parser("list")
    d = keys_sub.add_parser("delete")
    d.add_argument("--label", required=True)
    p.set_defaults(func=cmd_keys)

    p = sub.add_parser("pseudonym", help="derive pseudonyms")
    ps_sub = p.add_subparsers(dest="pseudonym_command", required=True)
    n = ps_sub.add_parser("new", help="build the tree and print its root")
    n.add_argument("--key-label", required=True)
    n.add_argument("--ids-file", required=True, help="JSON array of identifiers; order is significant")
    n.add_argument("--out")
    n.set_defaults(func=cmd_pseudonym_new)

    p = sub.add_parser("prove", help="write an ownership proof for one identifier")
    p.add_argument("--key-label", required=True)
    p.add_argument("--ids-file", required=True)
    p.add_argument("--index", type=int, required=True, help="0-based position in the ids file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="check a proof against a pseudonym and a known identifier")
    p.add_argument("--pseudonym", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--id-json", help='file with {"domain": ..., "attributes": [...]}')
    group.add_argument("--id", help="delimited attribute string, e.g. 'Alice|Smith|S-1234'")
    p.add_argument("--domain", help="domain label for --id")
    p.add_argument("--delimiter", default="|")
    p.add_argument("--proof", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sim", help="organisation simulations")
    sim_sub = p.add_subparsers(dest="sim_command", required=True)
    r = sim_sub.add_parser("run", help="run a scenario file or a bundled scenario by name")
    r.add_argument("scenario")
    r.add_argument("--transcript", help="write JSON-lines transcript here (default: stdout)")
    r.set_defaults(func=cmd_sim_run)

    p = sub.add_parser("bench", help="time tree construction and verification")
    p.add_argument("--max-n", type=int, default=128)
    p.add_argument("--suite", choices=suites, default="mp-sha256")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PseudonymError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
