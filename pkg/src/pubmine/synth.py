"""Synthetic corpora: MARC fixtures with known ground truth, Zipf transaction
sets for scale tests, and random rule databases for service benchmarks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .marc import ControlField, DataField, MarcRecord, write_iso2709
from .mining import MiningParams
from .rules import AssociationRule, RuleDatabase

UTF8_LEADER = "00000nam a2200000   4500"
MARC8_LEADER = "00000nam  2200000   4500"  # byte 9 blank: latin-1 fallback path

# Weighted (place, name) pool; correlated pairs so mining finds real rules.
# Entries carry ISBD punctuation, spelling variants, and bracket noise the
# cleaning stage must handle.
PAIR_POOL: list[tuple[tuple[str, str], int]] = [
    (("Chicago :", "American Library Association,"), 18),
    (("Chicago :", "Univ. of Chicago Press,"), 8),
    (("Chicago,", "University of Chicago Press"), 6),
    (("New York :", "Penguin Books,"), 14),
    (("New  York :", "penguin books"), 4),
    (("New York :", "St. Martin's Press,"), 8),
    (("London :", "Macmillan ;"), 12),
    (("london,", "MACMILLAN"), 3),
    (("London :", "Oxford University Press,"), 9),
    (("Oxford ;", "Oxford University Press"), 7),
    (("Paris :", "Gallimard,"), 8),
    (("Berlin :", "Springer,"), 10),
    (("berlin.", "springer"), 2),
    (("Washington, D.C. :", "Government Printing Office,"), 6),
    (("Moskva :", "Nauka,"), 5),
    (("México, D.F. :", "Fondo de Cultura Económica,"), 4),
    (("Toronto ;", "McClelland and Stewart,"), 4),
    (("[S.l.] :", "[s.n.]"), 5),
    (("[Chicago] :", "American Library Association,"), 3),
    (("Amsterdam :", "Elsevier,"), 6),
]


@dataclass
class MarcFixtureTruth:
    """Ground truth captured while generating a synthetic MARC file."""

    records_total: int = 0
    records_corrupted: int = 0
    pairs: int = 0
    records_with_pairs: int = 0
    latin1_records: int = 0

    @property
    def records_readable(self) -> int:
        return self.records_total - self.records_corrupted


def _synthetic_record(idx: int, rng: random.Random) -> tuple[MarcRecord, int]:
    """One record plus the number of publisher pairs it contributes."""
    fields: list = [ControlField("001", f"synth{idx:06d}")]
    fields.append(
        DataField("245", "10", (("a", f"Synthetic title {idx} /"), ("c", "by Test Author.")))
    )
    roll = rng.random()
    pairs = 0
    pool = [pair for pair, _ in PAIR_POOL]
    weights = [w for _, w in PAIR_POOL]
    if roll < 0.05:
        pass  # no 260 field at all
    elif roll < 0.10:
        fields.append(DataField("260", "  ", (("a", rng.choice(pool)[0]),)))  # place only, no $b
    elif roll < 0.18:
        # two statements in one 260: repeated $a/$b
        (p1, n1), (p2, n2) = rng.choices(pool, weights=weights, k=2)
        fields.append(DataField("260", "  ", (("a", p1), ("b", n1), ("a", p2), ("b", n2))))
        pairs = 2
    elif roll < 0.22:
        # two separate 260 fields
        (p1, n1), (p2, n2) = rng.choices(pool, weights=weights, k=2)
        fields.append(DataField("260", "  ", (("a", p1), ("b", n1), ("c", "1999."))))
        fields.append(DataField("260", "  ", (("a", p2), ("b", n2))))
        pairs = 2
    elif roll < 0.25:
        # $b with no preceding $a
        (_, name) = rng.choices(pool, weights=weights, k=1)[0]
        fields.append(DataField("260", "  ", (("b", name), ("c", "2001."))))
        pairs = 1
    else:
        place, name = rng.choices(pool, weights=weights, k=1)[0]
        fields.append(DataField("260", "  ", (("a", place), ("b", name), ("c", "c1984."))))
        pairs = 1
    latin1 = rng.random() < 0.03
    leader = MARC8_LEADER if latin1 else UTF8_LEADER
    return MarcRecord(leader, tuple(fields)), pairs


def write_synthetic_marc_file(
    path: str, n_records: int = 1000, seed: int = 20211, corrupt_fraction: float = 0.0
) -> MarcFixtureTruth:
    """Write a deterministic ISO 2709 fixture; optionally corrupt some records.

    Corruption overwrites a record's five length digits, which the parser
    must skip and count.  Corrupted records drop out of the pair totals.
    """
    rng = random.Random(seed)
    truth = MarcFixtureTruth()
    corrupt_ids = set()
    if corrupt_fraction > 0:
        k = int(round(n_records * corrupt_fraction))
        corrupt_ids = set(rng.sample(range(n_records), k))
    with open(path, "wb") as fh:
        for idx in range(n_records):
            record, pairs = _synthetic_record(idx, rng)
            data = write_iso2709(record)
            truth.records_total += 1
            if idx in corrupt_ids:
                data = b"XXXXX" + data[5:]
                truth.records_corrupted += 1
            else:
                truth.pairs += pairs
                if pairs:
                    truth.records_with_pairs += 1
                if record.leader[9] != "a":
                    truth.latin1_records += 1
            fh.write(data)
    return truth


def zipf_transactions(
    n_transactions: int,
    n_items: int = 10_000,
    seed: int = 7,
    exponent: float = 1.15,
    min_size: int = 1,
    max_size: int = 4,
) -> list[frozenset[str]]:
    """Transactions with item frequencies following a truncated Zipf law."""
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, n_items + 1, dtype=np.float64)
    probs = ranks**-exponent
    probs /= probs.sum()
    sizes = rng.integers(min_size, max_size + 1, size=n_transactions)
    draws = rng.choice(n_items, size=int(sizes.sum()), p=probs).tolist()
    names = [f"item{i:05d}" for i in range(n_items)]
    out: list[frozenset[str]] = []
    pos = 0
    for size in sizes.tolist():
        out.append(frozenset(names[d] for d in draws[pos : pos + size]))
        pos += size
    return out


def synthetic_rule_db(n_rules: int = 100_000, seed: int = 99, vocab_size: int = 5000) -> RuleDatabase:
    """Random but invariant-respecting rule base for index/latency tests."""
    rng = random.Random(seed)
    vocab = [f"v{i:05d}" for i in range(vocab_size)]
    seen: set[tuple[frozenset[str], str]] = set()
    rules: list[AssociationRule] = []
    while len(rules) < n_rules:
        size = rng.choice((1, 1, 2, 2, 3))
        antecedent = frozenset(rng.sample(vocab, size))
        consequent = rng.choice(vocab)
        if consequent in antecedent:
            continue
        key = (antecedent, consequent)
        if key in seen:
            continue
        seen.add(key)
        confidence = rng.uniform(0.6, 1.0)
        consequent_support = rng.uniform(0.0001, 1.0)
        rules.append(
            AssociationRule(
                antecedent=antecedent,
                consequent=consequent,
                confidence=confidence,
                lift=confidence / consequent_support,
                support=rng.uniform(1e-5, 1e-2),
            )
        )
    rules.sort(key=lambda r: (tuple(sorted(r.antecedent)), r.consequent))
    return RuleDatabase(tuple(rules), n_transactions=None, params=MiningParams())
