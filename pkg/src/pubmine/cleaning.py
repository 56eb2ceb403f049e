"""Value cleaning and fingerprint clustering.

Raw 260 subfield values carry legacy ISBD punctuation ("Chicago :"),
bracketed uncertainty markers ("[S.l.]"), and uncontrolled spelling
variants.  This module filters the noise and collapses variants whose
fingerprint keys collide, producing the canonical transactions the miner
consumes.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from itertools import groupby
from typing import Iterable, Iterator, TextIO, Union

from .marc import RawPublisherPair

# Trailing characters prescribed by ISBD display punctuation, stripped
# together with trailing whitespace.
ISBD_TRAILING = ":;,/="

CLUSTER_CSV_HEADER = ("fingerprint", "canonical", "variant", "count")


class Role(Enum):
    PLACE = "place"
    NAME = "name"


class RejectReason(Enum):
    BRACKETED = "bracketed"
    EMPTY_AFTER_CLEAN = "empty_after_clean"


@dataclass(frozen=True)
class CleanValue:
    text: str
    role: Role


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason


CleanResult = Union[CleanValue, Rejected]


def clean_value(raw: str, role: Role) -> CleanResult:
    """Normalize one raw subfield value, or reject it.

    Bracketed values are rejected wholly (brackets mark uncertain data);
    trailing ISBD punctuation and whitespace are stripped; internal
    whitespace runs collapse to single spaces.
    """
    # non-whitespace ASCII control characters are dropped anywhere
    text = "".join(ch for ch in raw if not (ord(ch) < 0x20 or ord(ch) == 0x7F) or ch.isspace())
    text = text.strip()
    if "[" in text or "]" in text:
        return Rejected(RejectReason.BRACKETED)
    text = text.rstrip(ISBD_TRAILING + " \t\n\r\v\f")
    if not text:
        return Rejected(RejectReason.EMPTY_AFTER_CLEAN)
    return CleanValue(" ".join(text.split()), role)


def fingerprint(value: str) -> str:
    """Token-sorted collision key; idempotent by construction.

    Pipeline: trim, lowercase, NFKD fold with combining marks dropped,
    punctuation/control removal, whitespace split, token dedupe, ascending
    sort, single-space join.
    """
    text = unicodedata.normalize("NFKD", value.strip().lower())
    kept = []
    for ch in text:
        cat = unicodedata.category(ch)
        if cat[0] == "M" or cat[0] == "P" or (cat[0] == "C" and not ch.isspace()):
            continue
        kept.append(ch)
    return " ".join(sorted(set("".join(kept).split())))


@dataclass(frozen=True)
class Cluster:
    canonical: str
    variants: tuple[tuple[str, int], ...]  # (text, count), count-descending

    @property
    def total(self) -> int:
        return sum(c for _, c in self.variants)


class ClusterTable:
    """Fingerprint key -> cluster of variant spellings.

    The canonical representative is the most frequent variant; ties break
    to the lexicographically smallest text.
    """

    def __init__(self, clusters: dict[str, Cluster]):
        self.clusters = clusters

    def __len__(self) -> int:
        return len(self.clusters)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ClusterTable) and self.clusters == other.clusters

    @property
    def variant_count(self) -> int:
        return sum(len(c.variants) for c in self.clusters.values())

    def canonicalize(self, text: str) -> str:
        """Map a cleaned value to its cluster canonical (itself if unknown)."""
        cluster = self.clusters.get(fingerprint(text))
        return cluster.canonical if cluster is not None else text


def build_clusters(values: Iterable[tuple[str, int]]) -> ClusterTable:
    """Group cleaned values by fingerprint key collision.

    Accepts (text, count) pairs with counts >= 1; repeated texts aggregate,
    so the result is independent of input order.
    """
    totals: Counter[str] = Counter()
    for text, count in values:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count} for {text!r}")
        totals[text] += count
    grouped: dict[str, list[tuple[str, int]]] = defaultdict(list)
    for text, count in totals.items():
        grouped[fingerprint(text)].append((text, count))
    clusters = {}
    for key, variants in grouped.items():
        variants.sort(key=lambda vc: (-vc[1], vc[0]))
        clusters[key] = Cluster(canonical=variants[0][0], variants=tuple(variants))
    return ClusterTable(clusters)


@dataclass
class ClusterTables:
    """Separate tables per role: places and names are distinct populations."""

    place: ClusterTable
    name: ClusterTable

    def for_role(self, role: Role) -> ClusterTable:
        return self.place if role is Role.PLACE else self.name


@dataclass(frozen=True)
class Transaction:
    """Deduplicated canonical items contributed by one record."""

    items: frozenset[str]
    record_id: str


@dataclass
class CanonicalizeStats:
    pairs_in: int = 0
    pairs_dropped: int = 0
    values_rejected: int = 0
    reject_reasons: Counter = field(default_factory=Counter)
    transactions: int = 0


def canonicalize_pairs(
    pairs: Iterable[RawPublisherPair],
    tables: ClusterTables,
    stats: CanonicalizeStats | None = None,
) -> Iterator[Transaction]:
    """Clean, cluster-map, and merge pairs into one transaction per record.

    A pair is dropped only when both members are rejected; a record whose
    pairs are all dropped emits no transaction.  Consecutive pairs sharing a
    record_id belong to the same record.
    """
    stats = stats if stats is not None else CanonicalizeStats()
    for record_id, group in groupby(pairs, key=lambda p: p.record_id):
        items: set[str] = set()
        for pair in group:
            stats.pairs_in += 1
            survivors = 0
            for raw, role in ((pair.place, Role.PLACE), (pair.name, Role.NAME)):
                result = clean_value(raw, role)
                if isinstance(result, Rejected):
                    stats.values_rejected += 1
                    stats.reject_reasons[result.reason.value] += 1
                else:
                    items.add(tables.for_role(role).canonicalize(result.text))
                    survivors += 1
            if survivors == 0:
                stats.pairs_dropped += 1
        if items:
            stats.transactions += 1
            yield Transaction(frozenset(items), record_id)


def collect_clean_values(
    pairs: Iterable[RawPublisherPair], stats: CanonicalizeStats | None = None
) -> tuple[Counter, Counter]:
    """First pass over the corpus: count cleaned values per role."""
    stats = stats if stats is not None else CanonicalizeStats()
    place_counts: Counter[str] = Counter()
    name_counts: Counter[str] = Counter()
    for pair in pairs:
        stats.pairs_in += 1
        for raw, role, counts in (
            (pair.place, Role.PLACE, place_counts),
            (pair.name, Role.NAME, name_counts),
        ):
            result = clean_value(raw, role)
            if isinstance(result, Rejected):
                stats.values_rejected += 1
                stats.reject_reasons[result.reason.value] += 1
            else:
                counts[result.text] += 1
    return place_counts, name_counts


def save_cluster_table(table: ClusterTable, dest: str | TextIO) -> None:
    """Persist as sorted CSV: fingerprint,canonical,variant,count."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            save_cluster_table(table, fh)
        return
    writer = csv.writer(dest, lineterminator="\r\n")
    writer.writerow(CLUSTER_CSV_HEADER)
    for key in sorted(table.clusters):
        cluster = table.clusters[key]
        for text, count in cluster.variants:
            writer.writerow((key, cluster.canonical, text, count))


def load_cluster_table(source: str | TextIO, validate: bool = True) -> ClusterTable:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_cluster_table(fh, validate=validate)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is not None and tuple(header) != CLUSTER_CSV_HEADER:
        raise ValueError(f"unexpected cluster CSV header: {header}")
    grouped: dict[str, tuple[str, list[tuple[str, int]]]] = {}
    for row in reader:
        if not row:
            continue
        key, canonical, variant, count = row
        if validate and fingerprint(variant) != key:
            raise ValueError(f"variant {variant!r} does not fingerprint to {key!r}")
        grouped.setdefault(key, (canonical, []))[1].append((variant, int(count)))
    return ClusterTable(
        {key: Cluster(canonical=canonical, variants=tuple(variants)) for key, (canonical, variants) in grouped.items()}
    )


def save_transactions(transactions: Iterable[Transaction], dest: str | TextIO) -> int:
    """Write line-delimited JSON, one {"items": [...]} object per line."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return save_transactions(transactions, fh)
    n = 0
    for t in transactions:
        dest.write(json.dumps({"items": sorted(t.items)}, ensure_ascii=False) + "\n")
        n += 1
    return n


def load_transactions(source: str | TextIO | Iterable[str]) -> Iterator[Transaction]:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            yield from load_transactions(fh)
        return
    for ordinal, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        yield Transaction(frozenset(obj["items"]), f"t-{ordinal}")
