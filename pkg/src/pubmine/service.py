"""HTTP autosuggest service over a rule database.

Loads rules into an inverted index (antecedent item -> rule posting list)
for subset matching without full scans, and serves ranked suggestions to
linked-data editor clients.
"""

from __future__ import annotations

import logging
import time
from collections import Counter
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .cleaning import ClusterTables, Rejected, Role, clean_value, fingerprint
from .rules import RuleDatabase, load_rules_csv, load_rules_jsonl

log = logging.getLogger("pubmine.service")

ITEMS_SEPARATOR = "\x1f"
DEFAULT_LIMIT = 10
MAX_LIMIT = 100
TOP_CONSEQUENTS = 5


class RuleIndex:
    """Immutable posting-list index for antecedent-subset matching."""

    def __init__(self, db: RuleDatabase):
        self.db = db
        self.rules = db.rules
        self.posting: dict[str, list[int]] = {}
        consequents: Counter[str] = Counter()
        for rid, rule in enumerate(self.rules):
            for item in rule.antecedent:
                self.posting.setdefault(item, []).append(rid)
            consequents[rule.consequent] += 1
        self.consequent_counts = consequents

    @property
    def rule_count(self) -> int:
        return len(self.rules)

    @property
    def consequent_count(self) -> int:
        return len(self.consequent_counts)

    def top_consequents(self, k: int = TOP_CONSEQUENTS) -> list[tuple[str, int]]:
        ranked = sorted(self.consequent_counts.items(), key=lambda vc: (-vc[1], vc[0]))
        return ranked[:k]

    def query(self, items: frozenset[str]) -> list[tuple[str, float, float]]:
        """Rules whose antecedent lies within `items`, ranked for suggestion.

        Candidates come from the union of the query items' posting lists;
        each is verified by subset check, so the result matches a linear
        scan of the whole rule base.
        """
        rules = self.rules
        best: dict[str, tuple[float, float]] = {}
        seen: set[int] = set()
        for item in items:
            for rid in self.posting.get(item, ()):
                if rid in seen:
                    continue
                seen.add(rid)
                rule = rules[rid]
                if rule.consequent in items or not rule.antecedent.issubset(items):
                    continue
                metrics = (rule.confidence, rule.lift)
                current = best.get(rule.consequent)
                if current is None or metrics > current:
                    best[rule.consequent] = metrics
        ranked = sorted(best.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
        return [(value, confidence, lift) for value, (confidence, lift) in ranked]


def load_rule_db(path: str | Path) -> RuleIndex:
    """Read a rule file (CSV or JSONL by extension) and build the index."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        if path.suffix in (".jsonl", ".ndjson", ".json"):
            db = load_rules_jsonl(fh)
        else:
            db = load_rules_csv(fh)
    index = RuleIndex(db)
    log.info("loaded %d rules, %d distinct consequents from %s", index.rule_count, index.consequent_count, path)
    return index


def canonicalize_query_item(text: str, clusters: ClusterTables) -> str:
    """Map a user-typed value onto its cluster canonical when one exists."""
    result = clean_value(text, Role.NAME)
    if isinstance(result, Rejected):
        return text.strip()
    key = fingerprint(result.text)
    for table in (clusters.name, clusters.place):
        cluster = table.clusters.get(key)
        if cluster is not None:
            return cluster.canonical
    return result.text


def create_app(
    index: RuleIndex,
    clusters: ClusterTables | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="pubmine suggest service")
    if cors_origins:
        app.add_middleware(
            CORSMiddleware, allow_origins=cors_origins, allow_methods=["GET"], allow_headers=["*"]
        )

    def bad_request(message: str) -> JSONResponse:
        return JSONResponse({"error": message}, status_code=400)

    @app.get("/healthz")
    def healthz() -> PlainTextResponse:
        return PlainTextResponse("ok")

    @app.get("/suggest")
    def suggest(request: Request) -> JSONResponse:
        params = request.query_params
        raw = params.get("items")
        if raw is None:
            return bad_request("missing items parameter")
        items = [part.strip() for part in raw.split(ITEMS_SEPARATOR) if part.strip()]
        if not items:
            return bad_request("items parameter is empty")
        limit_raw = params.get("limit")
        if limit_raw is None:
            limit = DEFAULT_LIMIT
        else:
            try:
                limit = int(limit_raw)
            except ValueError:
                return bad_request(f"limit must be an integer, got {limit_raw!r}")
        if not 1 <= limit <= MAX_LIMIT:
            return bad_request(f"limit must be between 1 and {MAX_LIMIT}")

        if clusters is not None:
            items = [canonicalize_query_item(item, clusters) for item in items]
        started = time.perf_counter()
        ranked = index.query(frozenset(items))[:limit]
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return JSONResponse(
            {
                "items": items,
                "suggestions": [
                    {"value": value, "confidence": confidence, "lift": lift}
                    for value, confidence, lift in ranked
                ],
                "elapsed_ms": elapsed_ms,
            }
        )

    @app.get("/stats")
    def stats() -> JSONResponse:
        return JSONResponse(
            {
                "rules": index.rule_count,
                "consequents": index.consequent_count,
                "top_consequents": [[value, count] for value, count in index.top_consequents()],
            }
        )

    return app


def run_service(
    rules_path: str,
    clusters: ClusterTables | None = None,
    port: int = 8750,
    cors_origins: list[str] | None = None,
) -> None:
    """Blocking uvicorn runner used by the CLI serve subcommand."""
    import uvicorn

    index = load_rule_db(rules_path)
    app = create_app(index, clusters=clusters, cors_origins=cors_origins)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="info")
