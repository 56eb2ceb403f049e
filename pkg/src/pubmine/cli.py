"""Command line entry point wiring the pipeline stages together."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import pipeline, rules, service
from .mining import EmptyCorpusError, MiningParams

log = logging.getLogger("pubmine.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pubmine",
        description="Mine publisher association rules from MARC bibliographic records.",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="parallelism cap for stages that support it (default: logical cores)",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="read MARC records, write publisher pairs CSV")
    p_extract.add_argument("inputs", nargs="+", help="MARC files (ISO 2709 or JSON lines)")
    p_extract.add_argument("--out", required=True, help="pairs CSV output path")
    p_extract.add_argument(
        "--format",
        choices=("auto", "iso2709", "jsonl"),
        default="auto",
        help="input format (default: by file extension)",
    )
    p_extract.add_argument(
        "--include-264",
        action="store_true",
        help="also read RDA 264 publication fields",
    )
    p_extract.add_argument("--manifest", help="pipeline manifest JSON to update")

    p_cluster = sub.add_parser("cluster", help="clean and cluster pairs, write transactions")
    p_cluster.add_argument("--pairs", required=True, help="pairs CSV from the extract stage")
    p_cluster.add_argument("--out-dir", required=True, help="directory for cluster tables and transactions")
    p_cluster.add_argument("--manifest", help="pipeline manifest JSON to update")

    p_mine = sub.add_parser("mine", help="mine frequent itemsets and association rules")
    p_mine.add_argument("--transactions", required=True, help="transactions JSONL from the cluster stage")
    p_mine.add_argument("--min-support", type=float, default=MiningParams.min_support)
    p_mine.add_argument("--min-confidence", type=float, default=MiningParams.min_confidence)
    p_mine.add_argument("--out-itemsets", required=True, help="frequent itemsets JSONL output")
    p_mine.add_argument("--out-rules", required=True, help="rules CSV output")
    p_mine.add_argument("--rules-jsonl", help="also write rules as JSON lines")
    p_mine.add_argument("--predictions", help="also write per-transaction predictions JSONL")
    p_mine.add_argument("--manifest", help="pipeline manifest JSON to update")

    p_serve = sub.add_parser("serve", help="serve ranked suggestions over HTTP")
    p_serve.add_argument("--rules", required=True, help="rules CSV or JSONL")
    p_serve.add_argument("--clusters", help="cluster table directory for query canonicalization")
    p_serve.add_argument("--port", type=int, default=8750)
    p_serve.add_argument(
        "--cors-origin",
        action="append",
        default=None,
        help="allowed CORS origin (repeatable)",
    )

    p_predict = sub.add_parser("predict", help="one-shot suggestion query without HTTP")
    p_predict.add_argument("items", nargs="+", help="known publisher items")
    p_predict.add_argument("--rules", required=True, help="rules CSV or JSONL")
    p_predict.add_argument("--clusters", help="cluster table directory for query canonicalization")
    p_predict.add_argument("--limit", type=int, default=10)
    return parser


def _cmd_extract(args: argparse.Namespace) -> int:
    counters = pipeline.run_extract(
        args.inputs,
        args.out,
        manifest_path=args.manifest,
        fmt=args.format,
        include_264=args.include_264,
    )
    print(
        f"extract: {counters['records_read']} records read, "
        f"{counters['records_skipped']} skipped, "
        f"{counters['pairs_extracted']} pairs -> {args.out}"
    )
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    counters = pipeline.run_cluster(args.pairs, args.out_dir, manifest_path=args.manifest)
    print(
        f"cluster: {counters['pairs_read']} pairs, "
        f"{counters['place_clusters']} place / {counters['name_clusters']} name clusters, "
        f"{counters['transactions']} transactions -> {args.out_dir}"
    )
    if counters["transactions"] == 0:
        print("warning: no transactions survived cleaning", file=sys.stderr)
    return 0


def _cmd_mine(args: argparse.Namespace) -> int:
    params = MiningParams(min_support=args.min_support, min_confidence=args.min_confidence)
    counters = pipeline.run_mine(
        args.transactions,
        args.out_itemsets,
        args.out_rules,
        params=params,
        rules_jsonl_out=args.rules_jsonl,
        predictions_out=args.predictions,
        workers=args.workers,
        manifest_path=args.manifest,
    )
    print(
        f"mine: {counters['transactions']} transactions, "
        f"{counters['frequent_itemsets']} itemsets, "
        f"{counters['rules']} rules -> {args.out_rules}"
    )
    return 0


def _load_clusters(path: str | None):
    if path is None:
        return None
    return pipeline.load_cluster_tables(path)


def _cmd_serve(args: argparse.Namespace) -> int:
    service.run_service(
        args.rules,
        clusters=_load_clusters(args.clusters),
        port=args.port,
        cors_origins=args.cors_origin,
    )
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    index = service.load_rule_db(args.rules)
    clusters = _load_clusters(args.clusters)
    if clusters is not None:
        items = [service.canonicalize_query_item(item, clusters) for item in args.items]
    else:
        items = list(args.items)
    if args.limit < 1:
        print("error: --limit must be at least 1", file=sys.stderr)
        return 2
    matches = index.query(frozenset(items))[: args.limit]
    print(
        json.dumps(
            {
                "items": items,
                "suggestions": [
                    {"value": value, "confidence": confidence, "lift": lift}
                    for value, confidence, lift in matches
                ],
            },
            ensure_ascii=False,
        )
    )
    return 0


_COMMANDS = {
    "extract": _cmd_extract,
    "cluster": _cmd_cluster,
    "mine": _cmd_mine,
    "serve": _cmd_serve,
    "predict": _cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (pipeline.PipelineError, EmptyCorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except rules.RuleFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
