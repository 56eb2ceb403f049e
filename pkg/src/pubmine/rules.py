"""Association rules and the prediction database.

Rules have an itemset antecedent and a single-item consequent; confidence,
lift, and support come straight from mined counts (no corpus rescan).  The
prediction database replays query itemsets against the rule base to get
ranked autosuggestion candidates.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .mining import FrequentItemset, MiningParams

UNIT_SEPARATOR = "\x1f"

RULES_CSV_HEADER = ("antecedent", "consequent", "confidence", "lift", "support")


class RuleIntegrityError(ValueError):
    """The mining result is not downward closed: a needed subset is missing."""


class RuleFormatError(ValueError):
    """A persisted rule row is malformed."""


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset[str]
    consequent: str
    confidence: float
    lift: float
    support: float

    def validate(self) -> None:
        if not self.antecedent:
            raise ValueError("antecedent must be non-empty")
        if self.consequent in self.antecedent:
            raise ValueError(f"consequent {self.consequent!r} appears in antecedent")
        if not (0 < self.confidence <= 1):
            raise ValueError(f"confidence {self.confidence} outside (0, 1]")
        if self.lift <= 0:
            raise ValueError(f"lift {self.lift} must be positive")
        if not (0 < self.support <= 1):
            raise ValueError(f"support {self.support} outside (0, 1]")
        consequent_support = self.confidence / self.lift
        if not (0 < consequent_support <= 1):
            raise ValueError(f"implied consequent support {consequent_support} outside (0, 1]")


@dataclass(frozen=True)
class RuleDatabase:
    """Rules sorted by (antecedent, consequent) for deterministic serialization."""

    rules: tuple[AssociationRule, ...]
    n_transactions: int | None = None
    params: MiningParams | None = None

    def validate(self) -> None:
        seen = set()
        for rule in self.rules:
            rule.validate()
            key = (rule.antecedent, rule.consequent)
            if key in seen:
                raise ValueError(f"duplicate rule {sorted(rule.antecedent)} -> {rule.consequent}")
            seen.add(key)


@dataclass(frozen=True)
class PredictionEntry:
    """Query itemset with its ranked (item, confidence, lift) predictions."""

    items: frozenset[str]
    prediction: tuple[tuple[str, float, float], ...]


def _rule_sort_key(rule: AssociationRule):
    return (tuple(sorted(rule.antecedent)), rule.consequent)


def generate_rules(itemsets: Iterable[FrequentItemset], params: MiningParams, n_transactions: int) -> RuleDatabase:
    """Emit (Z \\ {z}) -> z for every frequent Z, |Z| >= 2, meeting min_confidence.

    Metrics are computed from mined counts only; a missing antecedent or
    consequent count signals an incomplete mining result.
    """
    counts: dict[frozenset[str], int] = {fi.items: fi.count for fi in itemsets}
    rules: list[AssociationRule] = []
    for itemset, count in counts.items():
        if len(itemset) < 2:
            continue
        for consequent in itemset:
            antecedent = itemset - {consequent}
            antecedent_count = counts.get(antecedent)
            consequent_count = counts.get(frozenset((consequent,)))
            if antecedent_count is None or consequent_count is None:
                raise RuleIntegrityError(
                    f"itemset {sorted(itemset)} lacks a frequent subset; mining result incomplete"
                )
            confidence = count / antecedent_count
            if confidence < params.min_confidence:
                continue
            lift = confidence * n_transactions / consequent_count
            rules.append(AssociationRule(antecedent, consequent, confidence, lift, count / n_transactions))
    rules.sort(key=_rule_sort_key)
    return RuleDatabase(tuple(rules), n_transactions, params)


def rule_candidate_count(itemsets: Iterable[FrequentItemset]) -> int:
    """Number of (itemset, member) rule candidates; an upper bound on rules."""
    return sum(len(fi.items) for fi in itemsets if len(fi.items) >= 2)


def _rank_matches(query: frozenset[str], rules: Iterable[AssociationRule]) -> list[tuple[str, float, float]]:
    """Rank consequents of rules with antecedent within the query.

    Per predicted item the highest-confidence source rule wins (lift breaks
    ties); the result orders by confidence desc, lift desc, item asc.
    """
    best: dict[str, tuple[float, float]] = {}
    for rule in rules:
        if rule.consequent in query or not rule.antecedent <= query:
            continue
        metrics = (rule.confidence, rule.lift)
        current = best.get(rule.consequent)
        if current is None or metrics > current:
            best[rule.consequent] = metrics
    ranked = sorted(best.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
    return [(item, confidence, lift) for item, (confidence, lift) in ranked]


def predict(items: Iterable[str], db: RuleDatabase, limit: int) -> list[tuple[str, float, float]]:
    """Top suggestions for one itemset, by linear scan of the rule base."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    return _rank_matches(frozenset(items), db.rules)[:limit]


def build_prediction_db(db: RuleDatabase, queries: Iterable[Iterable[str]]) -> list[PredictionEntry]:
    """Replay query itemsets (deduplicated) against the rules.

    Entries with no prediction are omitted; output is sorted by itemset for
    deterministic serialization.
    """
    seen: set[frozenset[str]] = set()
    entries: list[PredictionEntry] = []
    for query in queries:
        items = frozenset(query)
        if not items or items in seen:
            continue
        seen.add(items)
        ranked = _rank_matches(items, db.rules)
        if ranked:
            entries.append(PredictionEntry(items, tuple(ranked)))
    entries.sort(key=lambda e: tuple(sorted(e.items)))
    return entries


def save_rules_csv(db: RuleDatabase, dest: str | TextIO) -> int:
    """CSV with US-joined antecedent items (items may contain commas)."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return save_rules_csv(db, fh)
    writer = csv.writer(dest, lineterminator="\r\n")
    writer.writerow(RULES_CSV_HEADER)
    for rule in db.rules:
        writer.writerow(
            (
                UNIT_SEPARATOR.join(sorted(rule.antecedent)),
                rule.consequent,
                repr(rule.confidence),
                repr(rule.lift),
                repr(rule.support),
            )
        )
    return len(db.rules)


def load_rules_csv(
    source: str | TextIO, n_transactions: int | None = None, params: MiningParams | None = None
) -> RuleDatabase:
    """Load and validate a rule CSV; malformed rows name their line number."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_rules_csv(fh, n_transactions=n_transactions, params=params)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is not None and tuple(header) != RULES_CSV_HEADER:
        raise RuleFormatError(f"line 1: unexpected header {header}")
    rules = []
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        if len(row) != 5:
            raise RuleFormatError(f"line {line}: expected 5 columns, got {len(row)}")
        antecedent_cell, consequent, conf_s, lift_s, supp_s = row
        antecedent = frozenset(part for part in antecedent_cell.split(UNIT_SEPARATOR) if part)
        try:
            rule = AssociationRule(antecedent, consequent, float(conf_s), float(lift_s), float(supp_s))
            rule.validate()
        except ValueError as exc:
            raise RuleFormatError(f"line {line}: {exc}") from exc
        rules.append(rule)
    return RuleDatabase(tuple(rules), n_transactions, params)


def save_rules_jsonl(db: RuleDatabase, dest: str | TextIO) -> int:
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return save_rules_jsonl(db, fh)
    for rule in db.rules:
        dest.write(
            json.dumps(
                {
                    "antecedent": sorted(rule.antecedent),
                    "consequent": rule.consequent,
                    "confidence": rule.confidence,
                    "lift": rule.lift,
                    "support": rule.support,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
    return len(db.rules)


def load_rules_jsonl(
    source: str | TextIO | Iterable[str], n_transactions: int | None = None, params: MiningParams | None = None
) -> RuleDatabase:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return load_rules_jsonl(fh, n_transactions=n_transactions, params=params)
    rules = []
    for line_num, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            rule = AssociationRule(
                frozenset(obj["antecedent"]),
                obj["consequent"],
                float(obj["confidence"]),
                float(obj["lift"]),
                float(obj["support"]),
            )
            rule.validate()
        except (ValueError, KeyError, TypeError) as exc:
            raise RuleFormatError(f"line {line_num}: {exc}") from exc
        rules.append(rule)
    return RuleDatabase(tuple(rules), n_transactions, params)


def save_predictions(entries: Iterable[PredictionEntry], dest: str | TextIO) -> int:
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return save_predictions(entries, fh)
    n = 0
    for entry in entries:
        dest.write(
            json.dumps(
                {
                    "items": sorted(entry.items),
                    "prediction": [
                        {"item": item, "confidence": confidence, "lift": lift}
                        for item, confidence, lift in entry.prediction
                    ],
                },
                ensure_ascii=False,
            )
            + "\n"
        )
        n += 1
    return n


def load_predictions(source: str | TextIO | Iterable[str]) -> Iterator[PredictionEntry]:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            yield from load_predictions(fh)
        return
    for line in source:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        yield PredictionEntry(
            frozenset(obj["items"]),
            tuple((p["item"], float(p["confidence"]), float(p["lift"])) for p in obj["prediction"]),
        )
