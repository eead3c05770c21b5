"""Bytecode-level code-clone detection toolkit for Ethereum smart contracts."""

from .analytics import (
    VULN_TYPES,
    ProvenanceTable,
    VulnProfile,
    classify_pair,
    duplicate_stats,
    pareto_report,
    provenance_table,
)
from .cluster import (
    ContractCluster,
    SimilarityGraph,
    UnionFind,
    build_graph,
    connected_components,
    expand_with_duplicates,
)
from .corpus import (
    CorpusManifest,
    FingerprintRecord,
    RemoteCode,
    fetch_code,
    fingerprint_record,
    import_records,
    load_db,
    save_db,
)
from .dappmatch import (
    DAppCloneCluster,
    DAppClonePair,
    DAppManifest,
    MatchResult,
    dapp_similarity,
    detect_clones,
    exclude_templates,
    km_match,
    volume_impact,
)
from .evm import (
    ContractRecord,
    DistinctContract,
    Instruction,
    TokenizedCode,
    decode,
    dedup,
    encode,
    parse_hex,
    preprocess,
    split_creation,
    strip_swarm,
    tokenize,
)
from .fingerprint import (
    FORMAT_VERSION,
    Fingerprint,
    TriggerSet,
    cut_pieces,
    generate_fp,
    piece_char,
)
from .opcodes import OPCODE_TABLE, Opcode, TRIGGER_OPCODES
from .similarity import (
    MetaAttributes,
    SimilarityPair,
    edit_distance,
    pairwise_compare,
    prune_filter,
    similarity_score,
)

__version__ = "0.1.0"

__all__ = [
    "ContractCluster",
    "ContractRecord",
    "CorpusManifest",
    "DAppCloneCluster",
    "DAppClonePair",
    "DAppManifest",
    "DistinctContract",
    "FORMAT_VERSION",
    "Fingerprint",
    "FingerprintRecord",
    "Instruction",
    "MatchResult",
    "MetaAttributes",
    "OPCODE_TABLE",
    "Opcode",
    "ProvenanceTable",
    "RemoteCode",
    "SimilarityGraph",
    "SimilarityPair",
    "TRIGGER_OPCODES",
    "TokenizedCode",
    "TriggerSet",
    "UnionFind",
    "VULN_TYPES",
    "VulnProfile",
    "build_graph",
    "classify_pair",
    "connected_components",
    "cut_pieces",
    "dapp_similarity",
    "decode",
    "dedup",
    "detect_clones",
    "duplicate_stats",
    "edit_distance",
    "encode",
    "exclude_templates",
    "expand_with_duplicates",
    "fetch_code",
    "fingerprint_record",
    "generate_fp",
    "import_records",
    "km_match",
    "load_db",
    "pairwise_compare",
    "pareto_report",
    "parse_hex",
    "piece_char",
    "preprocess",
    "provenance_table",
    "prune_filter",
    "save_db",
    "similarity_score",
    "split_creation",
    "strip_swarm",
    "tokenize",
    "volume_impact",
]
