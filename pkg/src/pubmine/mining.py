"""Frequent-pattern mining: FP-tree construction and FP-growth.

Transactions are sets of item strings.  Mining returns every itemset whose
transaction count reaches ceil(min_support * N), with exact counts, via
recursive conditional-pattern-base / conditional-tree growth.  A levelwise
exhaustive counter (`apriori_oracle`) provides an independent cross-check
for small universes.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Collection, Iterable, Iterator, Sequence, TextIO


class EmptyCorpusError(ValueError):
    """Mining over zero transactions is undefined."""


class OracleUniverseError(ValueError):
    """The brute-force oracle refuses exponential universes."""


@dataclass(frozen=True)
class MiningParams:
    """Support/confidence thresholds as fractions in (0, 1]."""

    min_support: float = 0.00001
    min_confidence: float = 0.6

    def __post_init__(self) -> None:
        if not (0 < self.min_support <= 1):
            raise ValueError(f"min_support must be in (0, 1], got {self.min_support}")
        if not (0 < self.min_confidence <= 1):
            raise ValueError(f"min_confidence must be in (0, 1], got {self.min_confidence}")


def support_count_threshold(min_support: float, n_transactions: int) -> int:
    # Exact ceil(min_support * N), reading the threshold as the decimal the
    # caller wrote (its repr), not the nearest binary double: 0.00001 over
    # 10^6 transactions must give 10, not 11.
    return math.ceil(Fraction(repr(min_support)) * n_transactions)


@dataclass(frozen=True)
class FList:
    """Frequent items ordered by descending count, ties ascending by item."""

    entries: tuple[tuple[str, int], ...]
    n_transactions: int
    threshold: int

    def rank(self) -> dict[str, int]:
        return {item: i for i, (item, _) in enumerate(self.entries)}


@dataclass(frozen=True)
class FrequentItemset:
    items: frozenset[str]
    count: int
    support: float


def _itemset_sort_key(entry: tuple[frozenset[str], int]):
    items, count = entry
    return (-count, tuple(sorted(items)))


def build_flist(transactions: Sequence[Collection[str]], params: MiningParams) -> FList:
    """Count items (set semantics per transaction) and keep those above threshold."""
    n = len(transactions)
    if n == 0:
        raise EmptyCorpusError("empty corpus")
    counts: Counter[str] = Counter()
    for t in transactions:
        counts.update(t if isinstance(t, (set, frozenset)) else set(t))
    threshold = support_count_threshold(params.min_support, n)
    entries = [(item, c) for item, c in counts.items() if c >= threshold]
    entries.sort(key=lambda ic: (-ic[1], ic[0]))
    return FList(tuple(entries), n, threshold)


class FPNode:
    __slots__ = ("item", "count", "parent", "children", "next")

    def __init__(self, item: str | None, count: int, parent: "FPNode | None"):
        self.item = item
        self.count = count
        self.parent = parent
        self.children: dict[str, FPNode] = {}
        self.next: FPNode | None = None


class _HeaderEntry:
    __slots__ = ("count", "head", "tail")

    def __init__(self, count: int):
        self.count = count
        self.head: FPNode | None = None
        self.tail: FPNode | None = None


class FPTree:
    """Prefix tree of frequency-ordered transactions with per-item node links.

    The header table maps each frequent item to its total count and the head
    of a chain visiting every node of that item exactly once.
    """

    def __init__(self, entries: Iterable[tuple[str, int]]):
        self.root = FPNode(None, 0, None)
        self.header: dict[str, _HeaderEntry] = {item: _HeaderEntry(count) for item, count in entries}

    def insert(self, path: Sequence[str], count: int) -> None:
        """Insert items (already filtered and in header order) as one path."""
        node = self.root
        for item in path:
            child = node.children.get(item)
            if child is None:
                child = FPNode(item, count, node)
                node.children[item] = child
                entry = self.header[item]
                if entry.tail is None:
                    entry.head = entry.tail = child
                else:
                    entry.tail.next = child
                    entry.tail = child
            else:
                child.count += count
            node = child

    def prefix_paths(self, item: str) -> list[tuple[tuple[str, ...], int]]:
        """Conditional pattern base: prefix path and count for each node of item."""
        paths = []
        node = self.header[item].head
        while node is not None:
            path = []
            p = node.parent
            while p is not None and p.item is not None:
                path.append(p.item)
                p = p.parent
            if path:
                path.reverse()
                paths.append((tuple(path), node.count))
            node = node.next
        return paths

    def single_path(self) -> list[tuple[str, int]] | None:
        """The root-to-leaf chain when the tree is a single path, else None."""
        path = []
        node = self.root
        while node.children:
            if len(node.children) > 1:
                return None
            node = next(iter(node.children.values()))
            path.append((node.item, node.count))
        return path

    def node_count(self) -> int:
        total = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            total += len(node.children)
            stack.extend(node.children.values())
        return total


def build_fptree(transactions: Sequence[Collection[str]], flist: FList) -> FPTree:
    """Filter each transaction to flist items, sort in flist order, insert."""
    rank = flist.rank()
    items_by_rank = [item for item, _ in flist.entries]
    # identical filtered transactions collapse before insertion
    aggregated: Counter[tuple[int, ...]] = Counter()
    for t in transactions:
        items = t if isinstance(t, (set, frozenset)) else set(t)
        ranks = sorted(rank[x] for x in items if x in rank)
        if ranks:
            aggregated[tuple(ranks)] += 1
    tree = FPTree(flist.entries)
    for ranks, count in aggregated.items():
        tree.insert([items_by_rank[r] for r in ranks], count)
    return tree


def _conditional_tree(
    paths: list[tuple[tuple[str, ...], int]], threshold: int
) -> FPTree:
    """Build a conditional FP-tree from weighted prefix paths."""
    counts: Counter[str] = Counter()
    for path, count in paths:
        for item in path:
            counts[item] += count
    entries = [(item, c) for item, c in counts.items() if c >= threshold]
    entries.sort(key=lambda ic: (-ic[1], ic[0]))
    rank = {item: i for i, (item, _) in enumerate(entries)}
    aggregated: Counter[tuple[str, ...]] = Counter()
    for path, count in paths:
        kept = sorted((item for item in path if item in rank), key=rank.__getitem__)
        if kept:
            aggregated[tuple(kept)] += count
    tree = FPTree(entries)
    for path, count in aggregated.items():
        tree.insert(path, count)
    return tree


def _emit_single_path(
    path: list[tuple[str, int]], suffix: tuple[str, ...], out: list[tuple[frozenset[str], int]]
) -> None:
    # Every non-empty subset of a single path is frequent; its count is the
    # count of the deepest member (counts are non-increasing along the path).
    k = len(path)
    for size in range(1, k + 1):
        for combo in combinations(range(k), size):
            items = frozenset(path[i][0] for i in combo) | frozenset(suffix)
            out.append((items, path[combo[-1]][1]))


def _mine_item(
    tree: FPTree, item: str, threshold: int, suffix: tuple[str, ...], out: list[tuple[frozenset[str], int]]
) -> None:
    new_suffix = suffix + (item,)
    out.append((frozenset(new_suffix), tree.header[item].count))
    paths = tree.prefix_paths(item)
    if not paths:
        return
    subtree = _conditional_tree(paths, threshold)
    if not subtree.header:
        return
    single = subtree.single_path()
    if single is not None:
        _emit_single_path(single, new_suffix, out)
        return
    for sub_item in subtree.header:
        _mine_item(subtree, sub_item, threshold, new_suffix, out)


def mine(
    transactions: Sequence[Collection[str]], params: MiningParams, workers: int = 1
) -> list[FrequentItemset]:
    """FP-growth over the corpus; exact counts, deterministic output order.

    Header items are partitioned across workers and mined independently on
    the shared tree; results concatenate and sort, so the worker count never
    affects the output.
    """
    flist = build_flist(transactions, params)
    n = flist.n_transactions
    if not flist.entries:
        return []
    tree = build_fptree(transactions, flist)
    threshold = flist.threshold

    results: list[tuple[frozenset[str], int]] = []
    single = tree.single_path()
    if single is not None:
        _emit_single_path(single, (), results)
    else:
        items = list(tree.header)
        if workers > 1 and len(items) > 1:
            groups = [items[g::workers] for g in range(workers)]

            def mine_group(group: list[str]) -> list[tuple[frozenset[str], int]]:
                local: list[tuple[frozenset[str], int]] = []
                for item in group:
                    _mine_item(tree, item, threshold, (), local)
                return local

            with ThreadPoolExecutor(max_workers=workers) as pool:
                for chunk in pool.map(mine_group, groups):
                    results.extend(chunk)
        else:
            for item in items:
                _mine_item(tree, item, threshold, (), results)

    results.sort(key=_itemset_sort_key)
    return [FrequentItemset(items, count, count / n) for items, count in results]


def apriori_oracle(
    transactions: Sequence[Collection[str]], params: MiningParams, max_universe: int = 20
) -> list[FrequentItemset]:
    """Exhaustive levelwise counting; independent cross-check for mine().

    Enumerates every candidate itemset over the distinct-item universe and
    counts containment directly, stopping once a whole level is infrequent.
    """
    txs = [frozenset(t) for t in transactions]
    n = len(txs)
    if n == 0:
        raise EmptyCorpusError("empty corpus")
    universe = sorted(set().union(*txs)) if txs else []
    if len(universe) > max_universe:
        raise OracleUniverseError(f"universe of {len(universe)} items exceeds limit {max_universe}")
    threshold = support_count_threshold(params.min_support, n)

    results: list[tuple[frozenset[str], int]] = []
    for size in range(1, len(universe) + 1):
        level: list[tuple[frozenset[str], int]] = []
        for combo in combinations(universe, size):
            count = sum(1 for t in txs if t.issuperset(combo))
            if count >= threshold:
                level.append((frozenset(combo), count))
        if not level:
            break  # downward closure: no larger itemset can be frequent
        results.extend(level)

    results.sort(key=_itemset_sort_key)
    return [FrequentItemset(items, count, count / n) for items, count in results]


def save_itemsets(itemsets: Iterable[FrequentItemset], dest: str | TextIO) -> int:
    """Line-delimited JSON: {"items": [...], "count": n, "support": x}."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return save_itemsets(itemsets, fh)
    n = 0
    for fi in itemsets:
        dest.write(
            json.dumps(
                {"items": sorted(fi.items), "count": fi.count, "support": fi.support},
                ensure_ascii=False,
            )
            + "\n"
        )
        n += 1
    return n


def load_itemsets(source: str | TextIO | Iterable[str]) -> Iterator[FrequentItemset]:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            yield from load_itemsets(fh)
        return
    for line in source:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        yield FrequentItemset(frozenset(obj["items"]), int(obj["count"]), float(obj["support"]))
