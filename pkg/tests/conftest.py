"""Shared fixtures: hand-frozen MARC bytes, the 4-transaction corpus with its
hand-derived mining results, and the pinned reference rows the serving path
must return verbatim."""

from __future__ import annotations

import os

import pytest

from pubmine.marc import ControlField, DataField, MarcRecord
from pubmine.mining import MiningParams, mine
from pubmine.rules import AssociationRule, RuleDatabase, generate_rules
from pubmine.synth import write_synthetic_marc_file

# Minimal one-record file, every byte written by hand from the ISO 2709 layout
# rules (lengths and offsets computed manually, not by this package's writer).
FROZEN_RECORD_BYTES = (
    b"00101nam a2200049   4500"
    b"001000600000"
    b"260004500006"
    b"\x1e"
    b"demo1\x1e"
    b"  \x1faChicago :\x1fbAmerican Library Association,\x1e"
    b"\x1d"
)

FROZEN_RECORD = MarcRecord(
    leader="00101nam a2200049   4500",
    fields=(
        ControlField("001", "demo1"),
        DataField(
            "260",
            "  ",
            (("a", "Chicago :"), ("b", "American Library Association,")),
        ),
    ),
)

# Reference rule pinned digit for digit; every serving path must return it
# without any float drift.
ALA_CHICAGO_RULE = AssociationRule(
    antecedent=frozenset({"American Library Association"}),
    consequent="Chicago",
    confidence=0.954449986873195,
    lift=111.876299789079,
    support=0.000295678879479931,
)

# Reference prediction: this query itemset must suggest this publisher first.
LAW_DIVISION_QUERY = frozenset({"Chicago", "Law Student Division American Bar Association"})
LAW_DIVISION_PREDICTION = "University of Chicago Press"


@pytest.fixture
def frozen_record_bytes() -> bytes:
    return FROZEN_RECORD_BYTES


@pytest.fixture
def frozen_record() -> MarcRecord:
    return FROZEN_RECORD


@pytest.fixture
def four_transactions() -> list[frozenset[str]]:
    return [
        frozenset({"a", "b"}),
        frozenset({"b", "c"}),
        frozenset({"a", "b", "c"}),
        frozenset({"a", "b"}),
    ]


@pytest.fixture
def derived_rule_db(four_transactions) -> RuleDatabase:
    """a->b (1.0, 1.0, 0.75); b->a (0.75, 1.0, 0.75); c->b (1.0, 1.0, 0.5)."""
    params = MiningParams(min_support=0.5, min_confidence=0.6)
    itemsets = mine(four_transactions, params)
    return generate_rules(itemsets, params, len(four_transactions))


@pytest.fixture
def reference_rule_db() -> RuleDatabase:
    """Both pinned reference rows plus a weaker competitor for the ranking path.

    Only the place rule's metrics are pinned exactly; the other two rules
    carry synthetic metrics that satisfy the rule invariants.
    """
    rules = [
        ALA_CHICAGO_RULE,
        AssociationRule(
            antecedent=LAW_DIVISION_QUERY,
            consequent=LAW_DIVISION_PREDICTION,
            confidence=0.84,
            lift=84.0,
            support=1.25e-05,
        ),
        AssociationRule(
            antecedent=frozenset({"Chicago"}),
            consequent=LAW_DIVISION_PREDICTION,
            confidence=0.62,
            lift=62.0,
            support=0.0003,
        ),
    ]
    rules.sort(key=lambda r: (tuple(sorted(r.antecedent)), r.consequent))
    db = RuleDatabase(tuple(rules), n_transactions=None, params=MiningParams())
    db.validate()
    return db


@pytest.fixture(scope="session")
def fixture_1000_path(tmp_path_factory) -> str:
    """Bundled 1,000-record MARC file, verified against its generator."""
    bundled = os.path.join(os.path.dirname(__file__), "data", "synthetic_1000.mrc")
    assert os.path.exists(bundled), "bundled MARC fixture missing"
    regen = tmp_path_factory.mktemp("fixture") / "regen.mrc"
    write_synthetic_marc_file(str(regen), n_records=1000, seed=20211, corrupt_fraction=0.0)
    with open(bundled, "rb") as a, open(regen, "rb") as b:
        assert a.read() == b.read(), "bundled fixture does not match its generator"
    return bundled


@pytest.fixture(scope="session")
def fixture_1000_truth(tmp_path_factory):
    regen = tmp_path_factory.mktemp("fixture-truth") / "regen.mrc"
    return write_synthetic_marc_file(str(regen), n_records=1000, seed=20211, corrupt_fraction=0.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "criterion" in nodeid:
                rows.append((nodeid.split("::")[-1], outcome))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(set(rows)):
            terminalreporter.write_line(f"{name}: {outcome.upper()}")
