"""User-generated pseudonyms derived as roots of keyed Merkle trees.

    >>> from merkle_pseudonym import CLASSICAL_256, Identifier, build_tree, prove, verify
    >>> ids = [Identifier("edu.univ", ["S-1234"]), Identifier("gov.vat", ["EL-9981"])]
    >>> tree = build_tree(CLASSICAL_256, CLASSICAL_256.random_key(), ids)
    >>> bool(verify(tree.pseudonym(), ids[0], prove(tree, 0)))
    True
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .identifiers import Identifier, decode, encode
from .keystore import KeyRecord, KeyStore
from .proof import OwnershipProof, Verdict, parse_proof, prove, serialize_proof, verify
from .suite import CLASSICAL_256, PQ_384, SUITES, HashSuite, get_suite
from .tree import LeafPlan, Pseudonym, PseudonymTree, auth_path, build_tree, parse_pseudonym, plan_leaves, root

__all__ = [
    "CLASSICAL_256", "PQ_384", "SUITES", "HashSuite", "get_suite",
    "Identifier", "encode", "decode",
    "LeafPlan", "Pseudonym", "PseudonymTree", "plan_leaves", "build_tree", "root", "auth_path",
    "parse_pseudonym",
    "OwnershipProof", "Verdict", "prove", "verify", "serialize_proof", "parse_proof",
    "KeyStore", "KeyRecord",
]
