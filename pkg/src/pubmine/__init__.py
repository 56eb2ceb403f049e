"""Publisher autosuggestion pipeline: MARC extraction, variant clustering,
frequent itemset mining, association rules, and an HTTP suggestion service."""

from .cleaning import (
    CleanValue,
    Cluster,
    ClusterTable,
    ClusterTables,
    Rejected,
    RejectReason,
    Role,
    Transaction,
    build_clusters,
    canonicalize_pairs,
    clean_value,
    fingerprint,
)
from .marc import (
    ControlField,
    DataField,
    MarcRecord,
    ParseDiagnostics,
    RawPublisherPair,
    extract_pairs,
    extract_publisher_pairs,
    parse_iso2709,
    read_json_lines,
    write_iso2709,
)
from .mining import (
    EmptyCorpusError,
    FList,
    FPTree,
    FrequentItemset,
    MiningParams,
    OracleUniverseError,
    apriori_oracle,
    build_flist,
    build_fptree,
    mine,
    support_count_threshold,
)
from .rules import (
    AssociationRule,
    PredictionEntry,
    RuleDatabase,
    RuleFormatError,
    RuleIntegrityError,
    build_prediction_db,
    generate_rules,
    predict,
)
from .service import RuleIndex, create_app, load_rule_db

__version__ = "0.1.0"

__all__ = [
    "AssociationRule",
    "CleanValue",
    "Cluster",
    "ClusterTable",
    "ClusterTables",
    "ControlField",
    "DataField",
    "EmptyCorpusError",
    "FList",
    "FPTree",
    "FrequentItemset",
    "MarcRecord",
    "MiningParams",
    "OracleUniverseError",
    "ParseDiagnostics",
    "PredictionEntry",
    "RawPublisherPair",
    "Rejected",
    "RejectReason",
    "Role",
    "RuleDatabase",
    "RuleFormatError",
    "RuleIndex",
    "RuleIntegrityError",
    "Transaction",
    "apriori_oracle",
    "build_clusters",
    "build_flist",
    "build_fptree",
    "build_prediction_db",
    "canonicalize_pairs",
    "clean_value",
    "create_app",
    "extract_pairs",
    "extract_publisher_pairs",
    "fingerprint",
    "generate_rules",
    "load_rule_db",
    "mine",
    "parse_iso2709",
    "predict",
    "read_json_lines",
    "support_count_threshold",
    "write_iso2709",
]
