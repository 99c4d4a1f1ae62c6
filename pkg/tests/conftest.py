import random

import pytest

from merkle_pseudonym import CLASSICAL_256, Identifier


def random_identifier(rng: random.Random, domain_pool: int = 1000) -> Identifier:
    n_attrs = rng.randint(1, 4)
    attrs = [rng.randbytes(rng.randint(1, 24)) for _ in range(n_attrs)]
    return Identifier(f"org{rng.randrange(domain_pool)}.ctx", attrs)


def random_identifiers(rng: random.Random, n: int) -> list[Identifier]:
    out: list[Identifier] = []
    seen = set()
    while len(out) < n:
        ident = random_identifier(rng)
        if ident not in seen:
            seen.add(ident)
            out.append(ident)
    return out


@pytest.fixture
def rng():
    return random.Random(20210601)


@pytest.fixture
def four_ids():
    """The four identifiers of a user known to four organisations."""
    return [
        Identifier("org1.bank", ["Alice", "Smith", "AB123456"]),
        Identifier("org2.univ", ["S-2019-0042"]),
        Identifier("org3.tax", ["VAT-EL-104839221"]),
        Identifier("org4.health", ["AMKA-01019912345"]),
    ]


@pytest.fixture
def key():
    return CLASSICAL_256.random_key()


# acceptance summary: one line per criterion in the terminal report

ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    detail = ""
    for section, content in report.sections:
        if "stdout" in section:
            detail = content.strip().splitlines()[-1] if content.strip() else ""
    ACCEPTANCE_RESULTS[name] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (status, detail) in ACCEPTANCE_RESULTS.items():
        line = f"[{status}] {name}"
        if detail:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
