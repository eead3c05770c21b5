"""Command-line pipeline: disasm, dedup, fingerprint, compare, cluster, dapp, vuln.

Every report command writes deterministic tab-separated files plus rendered
figures into the output directory; logs go to stderr, data to files or
stdout. Identical inputs and flags reproduce byte-identical reports when
the timestamp header is suppressed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import plots
from .analytics import BEHAVIORS, VulnProfile, duplicate_stats, pareto_report, provenance_table
from .cluster import (
    build_graph,
    connected_components,
    expand_with_duplicates,
    label_clusters,
)
from .corpus import (
    FingerprintRecord,
    build_manifest,
    fetch_code,
    fingerprint_record,
    import_records,
    index_by_id,
    load_db,
    load_dapps,
    load_groups,
    load_pairs,
    load_templates,
    load_vulns,
    save_db,
    save_groups,
    save_pairs,
)
from .dappmatch import DAppManifest, detect_clones, volume_impact
from .errors import EvmCloneError
from .evm import ContractRecord, DedupResult, decode, dedup, parse_hex, preprocess, tokenize
from .similarity import pairwise_compare

logger = logging.getLogger("evmclone")

RPC_ENV_VAR = "EVMCLONE_RPC_URL"

DEFAULT_THRESHOLD = 70.0
DEFAULT_PRUNE_FLOOR = 40.0


def _score_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= value <= 100.0:
        raise argparse.ArgumentTypeError(f"score {text} outside [0, 100]")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return value


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_tsv(
    path: Path,
    columns: Sequence[str],
    rows: Sequence[Sequence[object]],
    stamp: bool,
) -> None:
    lines = []
    if stamp:
        lines.append(f"# generated {datetime.now(timezone.utc).isoformat()}")
    lines.append("\t".join(columns))
    lines.extend("\t".join(str(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_summary(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_corpus(args: argparse.Namespace) -> tuple[list[ContractRecord], list[tuple[str, str]]]:
    """Import the corpus and drop records that cannot reach tokenized form."""
    records, import_issues = import_records(args.input)
    issues: list[tuple[str, str]] = [
        (f"line {issue.line_no}", issue.message) for issue in import_issues
    ]
    usable: list[ContractRecord] = []
    for record in records:
        try:
            tokenize(preprocess(record.raw_bytecode, args.input_kind))
        except EvmCloneError as exc:
            issues.append((record.id, str(exc)))
            continue
        usable.append(record)
    return usable, issues


def _dedup_corpus(args: argparse.Namespace) -> tuple[DedupResult, list[ContractRecord], list[tuple[str, str]]]:
    records, issues = _load_corpus(args)
    return dedup(records, args.input_kind), records, issues


def _resolve_bytecode(args: argparse.Namespace, parser: argparse.ArgumentParser) -> bytes:
    sources = [s for s in (args.hexcode, args.input, args.address) if s]
    if len(sources) != 1:
        parser.error("provide exactly one of HEXCODE, --input, or --address")
    if args.hexcode:
        return parse_hex(args.hexcode)
    if args.input:
        return parse_hex(Path(args.input).read_text(encoding="utf-8"))
    endpoint = args.rpc_url or os.environ.get(RPC_ENV_VAR)
    if not endpoint:
        parser.error(f"--address needs --rpc-url or ${RPC_ENV_VAR}")
    remote = fetch_code(endpoint, args.address, timeout=args.rpc_timeout)
    if remote.is_eoa_or_destroyed:
        raise EvmCloneError(f"address {remote.address} has no deployed code")
    return remote.code


def cmd_disasm(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    bytecode = _resolve_bytecode(args, parser)
    if args.input_kind != "raw":
        bytecode = preprocess(bytecode, args.input_kind)
        if not bytecode:
            raise EvmCloneError("no runtime code left after preprocessing")
    for instruction in decode(bytecode):
        print(instruction.listing_line())
    return 0


def cmd_dedup(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    result, records, issues = _dedup_corpus(args)
    stamp = not args.no_timestamp

    rows = []
    for distinct in result.distinct:
        code = distinct.tokenized
        rows.append(
            json.dumps(
                {
                    "id": distinct.record.id,
                    "deployer": distinct.record.deployer,
                    "creation_kind": distinct.record.creation_kind,
                    "deployed_at": distinct.record.deployed_at,
                    "token_hash": code.token_hash.hex(),
                    "runtime_hash": code.runtime_hash.hex(),
                    "opcode_count": code.opcode_count,
                    "block_count": code.block_count,
                    "runtime_byte_len": code.runtime_byte_len,
                    "duplicates": len(result.duplicate_groups[code.token_hash]),
                },
                sort_keys=True,
            )
        )
    (out / "distinct.jsonl").write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
    save_groups(out / "groups.jsonl", result)
    _write_tsv(out / "import_errors.tsv", ("ref", "message"), issues, stamp)

    reps = {d.tokenized.token_hash: d.record.id for d in result.distinct}
    stats = duplicate_stats(result.duplicate_groups, reps, top_n=args.top)
    _write_tsv(
        out / "duplicate_stats.tsv",
        ("rank", "duplicates", "representative", "token_hash"),
        stats.rows,
        stamp,
    )
    if stats.rank_size:
        plots.plot_rank_size(stats.rank_size, out / "duplicate_rank_size.png")

    manifest = build_manifest(records, str(args.input))
    _write_summary(
        out / "summary.json",
        {
            "source": manifest.source,
            "record_count": manifest.record_count,
            "kind_counts": manifest.kind_counts,
            "distinct_count": len(result.distinct),
            "issue_count": len(issues),
        },
    )
    logger.info(
        "dedup: %d records -> %d distinct (%d issues)",
        manifest.record_count,
        len(result.distinct),
        len(issues),
    )
    return 0


def cmd_fingerprint(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    result, records, issues = _dedup_corpus(args)
    db = [fingerprint_record(distinct) for distinct in result.distinct]
    save_db(out / "fpdb.jsonl", db)
    save_groups(out / "groups.jsonl", result)
    _write_tsv(out / "import_errors.tsv", ("ref", "message"), issues, not args.no_timestamp)
    manifest = build_manifest(records, str(args.input))
    _write_summary(
        out / "summary.json",
        {
            "source": manifest.source,
            "record_count": manifest.record_count,
            "kind_counts": manifest.kind_counts,
            "distinct_count": len(db),
            "issue_count": len(issues),
        },
    )
    logger.info("fingerprint: %d distinct contracts written", len(db))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    if args.prune_floor > args.threshold:
        logger.warning(
            "prune floor %.1f above threshold %.1f; stored pairs will not cover the threshold",
            args.prune_floor,
            args.threshold,
        )
    db = load_db(args.db)
    entries = [(r.contract_id, r.meta, r.fingerprint) for r in db]
    pairs = pairwise_compare(entries, threshold=args.prune_floor, workers=args.workers)
    save_pairs(out / "pairs.tsv", pairs, timestamp=not args.no_timestamp)
    plots.plot_score_distribution([p.score for p in pairs], out / "score_distribution.png")
    similar = sum(1 for p in pairs if p.score >= args.threshold)
    _write_summary(
        out / "summary.json",
        {
            "contracts": len(entries),
            "stored_pairs": len(pairs),
            "pairs_at_threshold": similar,
            "threshold": args.threshold,
            "prune_floor": args.prune_floor,
            "workers": args.workers,
        },
    )
    logger.info("compare: %d stored pairs, %d at threshold", len(pairs), similar)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    stamp = not args.no_timestamp
    pairs = load_pairs(args.pairs)
    db = load_db(args.db)
    universe = [record.contract_id for record in db]

    graph = build_graph(pairs, args.threshold, nodes=universe)
    clusters, singletons = connected_components(graph)

    groups = load_groups(args.groups)
    groups_by_rep = {g["representative"]: g["members"] for g in groups}
    expand_with_duplicates(clusters, groups_by_rep)

    if args.templates:
        templates = load_templates(args.templates)
        by_id = {r.contract_id: templates.get(r.token_hash) for r in db}
        label_clusters(clusters, {cid: name for cid, name in by_id.items() if name})

    _write_tsv(
        out / "clusters.tsv",
        ("cluster", "members", "population", "size", "label", "member_ids"),
        [
            (
                rank,
                c.size,
                c.total_population,
                c.render_size(),
                c.label or "",
                ",".join(c.members),
            )
            for rank, c in enumerate(clusters, start=1)
        ],
        stamp,
    )
    _write_tsv(out / "singletons.tsv", ("id",), [(s,) for s in singletons], stamp)

    summary: dict = {
        "threshold": args.threshold,
        "clusters": len(clusters),
        "isolated": len(singletons),
        "clustered_contracts": sum(c.size for c in clusters),
    }
    if clusters:
        distinct_report = pareto_report([c.size for c in clusters])
        population_report = pareto_report([c.total_population for c in clusters])
        _write_tsv(
            out / "pareto.tsv",
            ("rank", "distinct_share_pct", "population_share_pct"),
            [
                (rank, f"{d:.4f}", f"{p:.4f}")
                for (rank, d), (_, p) in zip(distinct_report.series, population_report.series)
            ],
            stamp,
        )
        plots.plot_concentration(
            {"distinct contracts": distinct_report.series, "with duplicates": population_report.series},
            out / "cluster_concentration.png",
        )
        plots.plot_rank_size(
            [(rank, size) for rank, size in enumerate(sorted((c.size for c in clusters), reverse=True), start=1)],
            out / "cluster_rank_size.png",
            title="Cluster sizes by rank",
        )
        summary["top_percent_distinct"] = {
            str(k): round(v, 4) for k, v in distinct_report.top_percent_shares.items()
        }
        summary["top_percent_population"] = {
            str(k): round(v, 4) for k, v in population_report.top_percent_shares.items()
        }
    _write_summary(out / "summary.json", summary)
    logger.info("cluster: %d clusters, %d isolated", len(clusters), len(singletons))
    return 0


def _resolved_dapps(
    dapps: list[DAppManifest],
    store: dict[str, FingerprintRecord],
    rep_of: dict[str, str],
) -> tuple[list[DAppManifest], dict[str, FingerprintRecord]]:
    """Map manifest addresses onto distinct-contract records, dropping unknowns."""
    resolved_store: dict[str, FingerprintRecord] = {}
    usable: list[DAppManifest] = []
    for dapp in dapps:
        kept = []
        for address in dapp.contracts:
            record = store.get(address) or store.get(rep_of.get(address, ""))
            if record is None:
                logger.warning("DApp %s: contract %s not in corpus; skipped", dapp.name, address)
                continue
            resolved_store[address] = record
            kept.append(address)
        if not kept:
            logger.warning("DApp %s has no known contracts; excluded", dapp.name)
            continue
        usable.append(
            DAppManifest(
                name=dapp.name,
                contracts=tuple(kept),
                deployers=dapp.deployers,
                volume=dapp.volume,
                deployed_at=dapp.deployed_at,
                category=dapp.category,
            )
        )
    return usable, resolved_store


def cmd_dapp(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    stamp = not args.no_timestamp
    dapps = load_dapps(args.dapps)
    store = index_by_id(load_db(args.db))
    rep_of: dict[str, str] = {}
    if args.groups:
        for group in load_groups(args.groups):
            for member in group["members"]:
                rep_of[member] = group["representative"]
    manifests, resolved = _resolved_dapps(dapps, store, rep_of)
    template_hashes = frozenset(load_templates(args.templates)) if args.templates else frozenset()

    pairs, clusters = detect_clones(manifests, resolved, template_hashes, args.threshold)
    rows, totals = volume_impact(clusters, {d.name: d for d in manifests})

    _write_tsv(
        out / "dapp_pairs.tsv",
        ("original", "clone", "score"),
        [(p.original, p.clone, f"{p.score:.1f}") for p in pairs],
        stamp,
    )
    _write_tsv(
        out / "dapp_clusters.tsv",
        ("original", "members", "member_names"),
        [(c.original, len(c.members), ",".join(c.members)) for c in clusters],
        stamp,
    )
    volume_rows = [
        (r.original, r.clone_count, f"{r.original_volume:.3f}", f"{r.plagiarized_volume:.3f}", r.ratio)
        for r in rows
    ]
    volume_rows.append(
        (
            totals.original,
            totals.clone_count,
            f"{totals.original_volume:.3f}",
            f"{totals.plagiarized_volume:.3f}",
            totals.ratio,
        )
    )
    _write_tsv(
        out / "volume_report.tsv",
        ("original", "clones", "original_volume", "plagiarized_volume", "ratio"),
        volume_rows,
        stamp,
    )
    if rows:
        plots.plot_volume_report(rows, out / "volume_report.png")
    _write_summary(
        out / "summary.json",
        {
            "dapps": len(dapps),
            "dapps_matched": len(manifests),
            "clone_pairs": len(pairs),
            "clusters": len(clusters),
            "plagiarized_dapps": sum(len(c.clones) for c in clusters),
            "original_volume": totals.original_volume,
            "plagiarized_volume": totals.plagiarized_volume,
            "volume_ratio": totals.ratio,
            "threshold": args.threshold,
        },
    )
    logger.info("dapp: %d clone pairs in %d clusters", len(pairs), len(clusters))
    return 0


def cmd_vuln(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    stamp = not args.no_timestamp
    pairs = [p for p in load_pairs(args.pairs) if p.score >= args.threshold]
    profiles = load_vulns(args.vulns)
    records, _ = import_records(args.input)
    authors = {record.id: record.deployer for record in records}

    involved = sorted({p.a for p in pairs} | {p.b for p in pairs})
    missing = [cid for cid in involved if cid not in authors]
    if missing:
        raise EvmCloneError(
            f"corpus lacks deployer info for {len(missing)} contracts (first: {missing[0]})"
        )
    # Contracts absent from the scanner file are treated as scanned-and-clean.
    full_profiles = {cid: profiles.get(cid, VulnProfile(cid, {})) for cid in involved}

    table = provenance_table(pairs, full_profiles, authors)
    _write_tsv(
        out / "provenance.tsv",
        ("author_relation", *BEHAVIORS),
        table.rows(),
        stamp,
    )
    plots.plot_provenance(table, out / "provenance.png")
    _write_summary(
        out / "summary.json",
        {
            "pairs": table.total_pairs,
            "cells": {f"{r}/{b}": count for (r, b), count in sorted(table.cells.items())},
            "column_totals": table.column_totals(),
            "same_vulnerability_share_pct": round(table.headline_share(), 4),
        },
    )
    logger.info(
        "vuln: %d pairs, %.2f%% with identical vulnerabilities",
        table.total_pairs,
        table.headline_share(),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evmclone",
        description="Bytecode-level clone detection for Ethereum smart contracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument(
            "--no-timestamp",
            action="store_true",
            help="omit the generation timestamp from report headers",
        )

    p = sub.add_parser("disasm", help="print an instruction listing")
    p.add_argument("hexcode", nargs="?", help="bytecode as a hex string")
    p.add_argument("--input", help="file containing hex bytecode")
    p.add_argument("--address", help="fetch deployed code for this address")
    p.add_argument("--rpc-url", help=f"node RPC endpoint (or ${RPC_ENV_VAR})")
    p.add_argument("--rpc-timeout", type=float, default=10.0, help="RPC timeout in seconds")
    p.add_argument(
        "--input-kind",
        choices=("raw", "auto", "runtime", "creation"),
        default="raw",
        help="preprocessing applied before listing (default: none)",
    )

    p = sub.add_parser("dedup", help="deduplicate a corpus by token hash")
    p.add_argument("--input", required=True, help="corpus JSONL file")
    p.add_argument("--input-kind", choices=("auto", "runtime", "creation"), default="auto")
    p.add_argument("--top", type=_positive_int, default=10, help="rows in the duplicate table")
    add_common(p)

    p = sub.add_parser("fingerprint", help="build the fingerprint database")
    p.add_argument("--input", required=True, help="corpus JSONL file")
    p.add_argument("--input-kind", choices=("auto", "runtime", "creation"), default="auto")
    add_common(p)

    p = sub.add_parser("compare", help="pair-wise similarity comparison")
    p.add_argument("--db", required=True, help="fingerprint database")
    p.add_argument("--threshold", type=_score_value, default=DEFAULT_THRESHOLD)
    p.add_argument(
        "--prune-floor",
        type=_score_value,
        default=DEFAULT_PRUNE_FLOOR,
        help="store all pairs at or above this score for later re-clustering",
    )
    p.add_argument("--workers", type=_positive_int, default=1)
    add_common(p)

    p = sub.add_parser("cluster", help="connected-component clustering of similar pairs")
    p.add_argument("--pairs", required=True, help="pairs TSV from compare")
    p.add_argument("--db", required=True, help="fingerprint database")
    p.add_argument("--groups", required=True, help="duplicate groups JSONL")
    p.add_argument("--threshold", type=_score_value, default=DEFAULT_THRESHOLD)
    p.add_argument("--templates", help="template list for cluster labels")
    add_common(p)

    p = sub.add_parser("dapp", help="detect plagiarized DApps")
    p.add_argument("--dapps", required=True, help="DApp manifests JSONL")
    p.add_argument("--db", required=True, help="fingerprint database")
    p.add_argument("--groups", help="duplicate groups JSONL for address resolution")
    p.add_argument("--templates", help="template list to exclude")
    p.add_argument("--threshold", type=_score_value, default=DEFAULT_THRESHOLD)
    add_common(p)

    p = sub.add_parser("vuln", help="vulnerability provenance over similar pairs")
    p.add_argument("--pairs", required=True, help="pairs TSV from compare")
    p.add_argument("--vulns", required=True, help="scanner findings TSV")
    p.add_argument("--input", required=True, help="corpus JSONL (deployer lookup)")
    p.add_argument("--threshold", type=_score_value, default=DEFAULT_THRESHOLD)
    add_common(p)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "disasm":
            return cmd_disasm(args, parser)
        handler = {
            "dedup": cmd_dedup,
            "fingerprint": cmd_fingerprint,
            "compare": cmd_compare,
            "cluster": cmd_cluster,
            "dapp": cmd_dapp,
            "vuln": cmd_vuln,
        }[args.command]
        return handler(args)
    except EvmCloneError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
