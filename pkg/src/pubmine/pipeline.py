"""Stage orchestration: extract, cluster, and mine steps plus a JSON manifest
that records parameters, input checksums, and per-stage counters."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from typing import Iterable

from . import cleaning, marc, mining, rules

log = logging.getLogger("pubmine.pipeline")

PLACE_CLUSTERS_FILENAME = "clusters_place.csv"
NAME_CLUSTERS_FILENAME = "clusters_name.csv"
TRANSACTIONS_FILENAME = "transactions.jsonl"


class PipelineError(RuntimeError):
    """A stage cannot produce meaningful output from its inputs."""


class ManifestError(ValueError):
    """Manifest counters violate a pipeline invariant."""


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_manifest(path: str) -> dict:
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    return {"stages": {}}


def save_manifest(manifest: dict, path: str) -> None:
    validate_manifest(manifest)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def validate_manifest(manifest: dict) -> None:
    """Counters must shrink monotonically along the pipeline."""
    stages = manifest.get("stages", {})
    pairs = stages.get("extract", {}).get("counters", {}).get("pairs_extracted")
    transactions = stages.get("cluster", {}).get("counters", {}).get("transactions")
    if pairs is not None and transactions is not None and transactions > pairs:
        raise ManifestError(f"transactions ({transactions}) exceed extracted pairs ({pairs})")
    mine_counters = stages.get("mine", {}).get("counters", {})
    n_rules = mine_counters.get("rules")
    candidates = mine_counters.get("rule_candidates")
    if n_rules is not None and candidates is not None and n_rules > candidates:
        raise ManifestError(f"rules ({n_rules}) exceed rule candidates ({candidates})")


def _record_stage(
    manifest_path: str | None,
    stage: str,
    inputs: Iterable[str],
    outputs: Iterable[str],
    counters: dict[str, int],
    params: dict | None = None,
) -> None:
    if manifest_path is None:
        return
    manifest = load_manifest(manifest_path)
    entry = {
        "inputs": {path: sha256_file(path) for path in inputs},
        "outputs": {path: sha256_file(path) for path in outputs},
        "counters": counters,
    }
    if params:
        entry["params"] = params
    manifest.setdefault("stages", {})[stage] = entry
    save_manifest(manifest, manifest_path)


def run_extract(
    inputs: list[str],
    pairs_out: str,
    manifest_path: str | None = None,
    fmt: str = "auto",
    include_264: bool = False,
) -> dict[str, int]:
    """Stream records from every input file into one pairs CSV."""
    counters = {
        "records_read": 0,
        "records_skipped": 0,
        "encoding_fallbacks": 0,
        "pairs_extracted": 0,
    }

    def all_pairs():
        for path in inputs:
            pair_iter, diag = marc.iter_pairs_with_diagnostics(path, fmt=fmt, include_264=include_264)
            yield from pair_iter
            counters["records_read"] += diag.records_read
            counters["records_skipped"] += diag.records_skipped
            counters["encoding_fallbacks"] += diag.encoding_fallbacks
            for message in diag.messages:
                log.warning("%s: %s", path, message)

    counters["pairs_extracted"] = marc.write_pairs_csv(all_pairs(), pairs_out)
    if counters["records_read"] == 0:
        raise PipelineError("no readable records in input")
    log.info(
        "extract: %d records, %d skipped, %d pairs",
        counters["records_read"],
        counters["records_skipped"],
        counters["pairs_extracted"],
    )
    _record_stage(manifest_path, "extract", inputs, [pairs_out], counters)
    return counters


def run_cluster(
    pairs_path: str, out_dir: str, manifest_path: str | None = None
) -> dict[str, int]:
    """Clean pair values, cluster variants, and emit canonical transactions."""
    os.makedirs(out_dir, exist_ok=True)
    stats = cleaning.CanonicalizeStats()
    place_counts, name_counts = cleaning.collect_clean_values(marc.read_pairs_csv(pairs_path), stats)
    tables = cleaning.ClusterTables(
        place=cleaning.build_clusters(place_counts.items()),
        name=cleaning.build_clusters(name_counts.items()),
    )
    place_path = os.path.join(out_dir, PLACE_CLUSTERS_FILENAME)
    name_path = os.path.join(out_dir, NAME_CLUSTERS_FILENAME)
    transactions_path = os.path.join(out_dir, TRANSACTIONS_FILENAME)
    cleaning.save_cluster_table(tables.place, place_path)
    cleaning.save_cluster_table(tables.name, name_path)

    stats = cleaning.CanonicalizeStats()
    transactions = cleaning.canonicalize_pairs(marc.read_pairs_csv(pairs_path), tables, stats)
    cleaning.save_transactions(transactions, transactions_path)
    counters = {
        "pairs_read": stats.pairs_in,
        "pairs_dropped": stats.pairs_dropped,
        "values_rejected": stats.values_rejected,
        "place_clusters": len(tables.place),
        "place_variants": tables.place.variant_count,
        "name_clusters": len(tables.name),
        "name_variants": tables.name.variant_count,
        "transactions": stats.transactions,
    }
    if counters["transactions"] == 0:
        log.warning("cluster: no transactions survived cleaning")
    log.info(
        "cluster: %d pairs in, %d place / %d name clusters, %d transactions",
        counters["pairs_read"],
        counters["place_clusters"],
        counters["name_clusters"],
        counters["transactions"],
    )
    _record_stage(
        manifest_path,
        "cluster",
        [pairs_path],
        [place_path, name_path, transactions_path],
        counters,
    )
    return counters


def load_cluster_tables(cluster_dir: str) -> cleaning.ClusterTables:
    return cleaning.ClusterTables(
        place=cleaning.load_cluster_table(os.path.join(cluster_dir, PLACE_CLUSTERS_FILENAME)),
        name=cleaning.load_cluster_table(os.path.join(cluster_dir, NAME_CLUSTERS_FILENAME)),
    )


def run_mine(
    transactions_path: str,
    itemsets_out: str,
    rules_out: str,
    params: mining.MiningParams | None = None,
    rules_jsonl_out: str | None = None,
    predictions_out: str | None = None,
    workers: int = 1,
    manifest_path: str | None = None,
) -> dict[str, int]:
    """Mine frequent itemsets, derive rules, optionally precompute predictions."""
    params = params or mining.MiningParams()
    loaded = list(cleaning.load_transactions(transactions_path))
    transactions = [t.items for t in loaded]
    if not transactions:
        raise PipelineError("no transactions to mine")
    itemsets = mining.mine(transactions, params, workers=workers)
    mining.save_itemsets(itemsets, itemsets_out)
    db = rules.generate_rules(itemsets, params, len(transactions))
    rules.save_rules_csv(db, rules_out)
    outputs = [itemsets_out, rules_out]
    if rules_jsonl_out is not None:
        rules.save_rules_jsonl(db, rules_jsonl_out)
        outputs.append(rules_jsonl_out)
    counters = {
        "transactions": len(transactions),
        "frequent_itemsets": len(itemsets),
        "rule_candidates": rules.rule_candidate_count(itemsets),
        "rules": len(db.rules),
    }
    if predictions_out is not None:
        queries = [t.items for t in loaded]
        predictions = rules.build_prediction_db(db, queries)
        rules.save_predictions(predictions, predictions_out)
        outputs.append(predictions_out)
        counters["predictions"] = len(predictions)
    log.info(
        "mine: %d transactions, %d itemsets, %d rules",
        counters["transactions"],
        counters["frequent_itemsets"],
        counters["rules"],
    )
    _record_stage(
        manifest_path,
        "mine",
        [transactions_path],
        outputs,
        counters,
        params={
            "min_support": params.min_support,
            "min_confidence": params.min_confidence,
            "workers": workers,
        },
    )
    return counters
