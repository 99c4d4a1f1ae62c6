"""Timing of tree construction and proof verification for growing N."""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass

from .identifiers import Identifier
from .proof import prove, verify
from .suite import HashSuite, get_suite
from .tree import build_tree

CSV_HEADER = ("n", "leaves", "suite", "build_ms", "verify_ms", "proof_bytes")
MAX_N = 4096
WARMUP = 3
DEFAULT_REPETITIONS = 20


@dataclass(frozen=True)
class BenchRow:
    n: int
    leaves: int
    suite: str
    build_ms: float
    verify_ms: float
    proof_bytes: int


@dataclass
class BenchReport:
    rows: list[BenchRow]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([r.n, r.leaves, r.suite, f"{r.build_ms:.4f}", f"{r.verify_ms:.4f}", r.proof_bytes])
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2) + "\n"


def sizes(max_n: int) -> list[int]:
    """Powers of two from 2 up to ``max_n``, plus ``max_n`` itself."""
    out = []
    n = 2
    while n <= max_n:
        out.append(n)
        n *= 2
    if max_n not in out:
        out.append(max_n)
    return out


def synthetic_identifiers(n: int) -> list[Identifier]:
    return [Identifier(f"bench.org{i:04d}", [f"subject-{i:06d}", "Doe"]) for i in range(n)]


def _median_ms(fn, repetitions: int) -> float:
    for _ in range(WARMUP):
        fn()
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter_ns()
        fn()
        samples.append((time.perf_counter_ns() - start) / 1e6)
    return statistics.median(samples)


def bench_one(n: int, suite: HashSuite, repetitions: int = DEFAULT_REPETITIONS) -> BenchRow:
    ids = synthetic_identifiers(n)
    key = suite.random_key()
    tree = build_tree(suite, key, ids)
    pseudonym = tree.pseudonym()
    # Verify the last identifier; every index has the same path length.
    index = n - 1
    proof = prove(tree, index)
    if not verify(pseudonym, ids[index], proof):
        raise AssertionError("benchmark proof failed to verify")
    build_ms = _median_ms(lambda: build_tree(suite, key, ids), repetitions)
    verify_ms = _median_ms(lambda: verify(pseudonym, ids[index], proof), repetitions)
    return BenchRow(n, tree.leaf_count, suite.suite_id, build_ms, verify_ms, proof.digest_bytes)


def run_bench(max_n: int, suite: HashSuite | str = "mp-sha256",
              repetitions: int = DEFAULT_REPETITIONS) -> BenchReport:
    if not 1 <= max_n <= MAX_N:
        raise ValueError(f"max_n must be in 1..{MAX_N}")
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    suite = get_suite(suite)
    return BenchReport([bench_one(n, suite, repetitions) for n in sizes(max_n)])
