"""Corpus ingestion, node RPC retrieval, and fingerprint-database persistence.

File formats are line oriented so multi-million-row corpora stream:

* contract corpus: one JSON object per line with fields ``address``,
  ``deployer``, ``creation_kind``, ``bytecode`` (hex), optional ``deployed_at``
  (epoch seconds or ISO-8601);
* fingerprint db: a JSON header line carrying ``format_version`` followed by
  one JSON record per distinct contract;
* duplicate groups: one JSON object per line (``token_hash``,
  ``representative``, ``members``);
* DApp manifests: one JSON object per line (``name``, ``contracts``,
  ``deployers``, ``volume``, ``deployed_at``, optional ``category``);
* templates and vulnerability findings: tab-separated rows, ``#`` comments.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

from .analytics import VULN_TYPES, VulnProfile
from .dappmatch import DAppManifest
from .errors import CorpusIoError, ProtocolError, RpcError, VersionError
from .evm import ContractRecord, DedupResult, DistinctContract, parse_hex
from .fingerprint import FORMAT_VERSION, Fingerprint, generate_fp
from .similarity import MetaAttributes, SimilarityPair

logger = logging.getLogger(__name__)

CREATION_KINDS = ("user_created", "contract_created")

DB_KIND = "fingerprint-db"


@dataclass(frozen=True)
class ImportIssue:
    """One malformed corpus entry, kept out of the record stream."""

    line_no: int
    message: str


@dataclass(frozen=True)
class CorpusManifest:
    """Shape summary of an ingested corpus."""

    source: str
    record_count: int
    kind_counts: dict[str, int]


@dataclass(frozen=True)
class FingerprintRecord:
    """Everything downstream stages need to know about one distinct contract."""

    contract_id: str
    token_hash: bytes
    runtime_hash: bytes
    meta: MetaAttributes
    fingerprint: Fingerprint
    truncated_tail: bool = False
    format_version: int = FORMAT_VERSION


@dataclass(frozen=True)
class RemoteCode:
    """Runtime code fetched for an address; empty means EOA or destroyed."""

    address: str
    code: bytes

    @property
    def is_eoa_or_destroyed(self) -> bool:
        return not self.code


def _normalize_address(value: str, what: str) -> str:
    text = value.strip().lower()
    if not text.startswith("0x"):
        text = "0x" + text
    body = text[2:]
    if len(body) != 40 or any(c not in "0123456789abcdef" for c in body):
        raise ValueError(f"{what} {value!r} is not a 20-byte hex address")
    return text


def _parse_timestamp(value: object) -> int:
    if isinstance(value, bool):
        raise ValueError("timestamp must be a number or ISO-8601 string")
    if isinstance(value, (int, float)):
        return int(value)
    if isinstance(value, str):
        parsed = datetime.fromisoformat(value)
        if parsed.tzinfo is None:
            parsed = parsed.replace(tzinfo=timezone.utc)
        return int(parsed.timestamp())
    raise ValueError("timestamp must be a number or ISO-8601 string")


def _record_from_entry(entry: dict) -> ContractRecord:
    address = _normalize_address(str(entry["address"]), "address")
    deployer = _normalize_address(str(entry["deployer"]), "deployer")
    kind = entry["creation_kind"]
    if kind not in CREATION_KINDS:
        raise ValueError(f"creation_kind must be one of {CREATION_KINDS}, got {kind!r}")
    bytecode = parse_hex(str(entry["bytecode"]))
    if not bytecode:
        raise ValueError("bytecode is empty")
    deployed_at = entry.get("deployed_at")
    return ContractRecord(
        id=address,
        deployer=deployer,
        creation_kind=kind,
        raw_bytecode=bytecode,
        deployed_at=None if deployed_at is None else _parse_timestamp(deployed_at),
    )


def import_records(path: str | Path) -> tuple[list[ContractRecord], list[ImportIssue]]:
    """Load a corpus file; malformed lines become issues instead of failures."""
    records: list[ContractRecord] = []
    issues: list[ImportIssue] = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            if not isinstance(entry, dict):
                raise ValueError("entry must be a JSON object")
            records.append(_record_from_entry(entry))
        except (ValueError, KeyError, TypeError) as exc:
            issues.append(ImportIssue(line_no, _issue_text(exc)))
    return records, issues


def _issue_text(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing field {exc.args[0]!r}"
    return str(exc)


def _read_lines(path: str | Path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusIoError(f"cannot read {path}: {exc}") from exc


def build_manifest(records: Sequence[ContractRecord], source: str) -> CorpusManifest:
    counts = {kind: 0 for kind in CREATION_KINDS}
    for record in records:
        counts[record.creation_kind] += 1
    return CorpusManifest(source=source, record_count=len(records), kind_counts=counts)


def fingerprint_record(distinct: DistinctContract) -> FingerprintRecord:
    """Assemble the persisted record for one distinct contract."""
    code = distinct.tokenized
    return FingerprintRecord(
        contract_id=distinct.record.id,
        token_hash=code.token_hash,
        runtime_hash=code.runtime_hash,
        meta=MetaAttributes(code.opcode_count, code.block_count, code.runtime_byte_len),
        fingerprint=generate_fp(code),
        truncated_tail=code.truncated_tail,
    )


def save_db(path: str | Path, records: Sequence[FingerprintRecord]) -> None:
    """Write the fingerprint database with a version header."""
    lines = [json.dumps({"format_version": FORMAT_VERSION, "kind": DB_KIND})]
    for record in records:
        lines.append(
            json.dumps(
                {
                    "id": record.contract_id,
                    "token_hash": record.token_hash.hex(),
                    "runtime_hash": record.runtime_hash.hex(),
                    "opcode_count": record.meta.opcode_count,
                    "block_count": record.meta.block_count,
                    "runtime_byte_len": record.meta.runtime_byte_len,
                    "fingerprint": record.fingerprint.chars,
                    "truncated_tail": record.truncated_tail,
                },
                sort_keys=True,
            )
        )
    _write_text(path, "\n".join(lines) + "\n")


def load_db(path: str | Path) -> list[FingerprintRecord]:
    """Load a fingerprint database; version mismatches never migrate silently."""
    lines = _read_lines(path)
    if not lines:
        raise VersionError(f"{path} has no header line")
    try:
        header = json.loads(lines[0])
    except ValueError as exc:
        raise VersionError(f"{path} has a malformed header: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != DB_KIND:
        raise VersionError(f"{path} is not a fingerprint database")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"{path} has format_version {version!r}; this build reads {FORMAT_VERSION}"
        )
    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            records.append(
                FingerprintRecord(
                    contract_id=entry["id"],
                    token_hash=bytes.fromhex(entry["token_hash"]),
                    runtime_hash=bytes.fromhex(entry["runtime_hash"]),
                    meta=MetaAttributes(
                        entry["opcode_count"],
                        entry["block_count"],
                        entry["runtime_byte_len"],
                    ),
                    fingerprint=Fingerprint(entry["fingerprint"]),
                    truncated_tail=bool(entry.get("truncated_tail", False)),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad db record: {exc}") from exc
    return records


def index_by_id(records: Iterable[FingerprintRecord]) -> dict[str, FingerprintRecord]:
    return {record.contract_id: record for record in records}


def save_groups(path: str | Path, dedup_result: DedupResult) -> None:
    """Persist duplicate groups (token hash, representative, members)."""
    reps = {d.tokenized.token_hash: d.record.id for d in dedup_result.distinct}
    lines = []
    for token_hash in sorted(dedup_result.duplicate_groups):
        members = dedup_result.duplicate_groups[token_hash]
        lines.append(
            json.dumps(
                {
                    "token_hash": token_hash.hex(),
                    "representative": reps[token_hash],
                    "members": list(members),
                },
                sort_keys=True,
            )
        )
    _write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def load_groups(path: str | Path) -> list[dict]:
    """Read duplicate groups back as dicts with token_hash bytes restored."""
    groups = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            entry["token_hash"] = bytes.fromhex(entry["token_hash"])
            groups.append(entry)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad group record: {exc}") from exc
    return groups


def load_templates(path: str | Path) -> dict[bytes, str]:
    """Read the template list: token hash and template name per row."""
    templates: dict[bytes, str] = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 2:
            raise CorpusIoError(f"{path}:{line_no}: expected 'token_hash<TAB>name'")
        try:
            templates[bytes.fromhex(parts[0])] = parts[1]
        except ValueError as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad token hash: {exc}") from exc
    return templates


def load_vulns(path: str | Path) -> dict[str, VulnProfile]:
    """Read scanner findings (contract id, vulnerability type, count) rows."""
    findings: dict[str, dict[str, int]] = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 3:
            raise CorpusIoError(
                f"{path}:{line_no}: expected 'contract_id<TAB>vuln_type<TAB>count'"
            )
        contract_id, vuln_type, count_text = parts
        if vuln_type not in VULN_TYPES:
            raise CorpusIoError(
                f"{path}:{line_no}: unknown vulnerability type {vuln_type!r}"
            )
        try:
            count = int(count_text)
        except ValueError as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad count: {exc}") from exc
        if count < 0:
            raise CorpusIoError(f"{path}:{line_no}: negative count")
        per_contract = findings.setdefault(contract_id, {})
        per_contract[vuln_type] = per_contract.get(vuln_type, 0) + count
    return {
        contract_id: VulnProfile(contract_id, types)
        for contract_id, types in findings.items()
    }


def load_dapps(path: str | Path) -> list[DAppManifest]:
    """Read DApp manifests from a JSON-lines file."""
    manifests = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            manifests.append(
                DAppManifest(
                    name=str(entry["name"]),
                    contracts=tuple(
                        _normalize_address(c, "contract") for c in entry["contracts"]
                    ),
                    deployers=frozenset(
                        _normalize_address(d, "deployer") for d in entry["deployers"]
                    ),
                    volume=float(entry["volume"]),
                    deployed_at=_parse_timestamp(entry["deployed_at"]),
                    category=entry.get("category"),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad DApp manifest: {exc}") from exc
    return manifests


def save_pairs(
    path: str | Path,
    pairs: Sequence[SimilarityPair],
    timestamp: bool = True,
) -> None:
    """Write similar-pair rows: id_a, id_b, score with one decimal."""
    lines = []
    if timestamp:
        lines.append(f"# generated {datetime.now(timezone.utc).isoformat()}")
    lines.append("id_a\tid_b\tscore")
    for pair in sorted(pairs, key=lambda p: (p.a, p.b)):
        lines.append(f"{pair.a}\t{pair.b}\t{pair.score:.1f}")
    _write_text(path, "\n".join(lines) + "\n")


def load_pairs(path: str | Path) -> list[SimilarityPair]:
    pairs = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        text = line.strip()
        if not text or text.startswith("#") or text.startswith("id_a\t"):
            continue
        parts = text.split("\t")
        if len(parts) != 3:
            raise CorpusIoError(f"{path}:{line_no}: expected 'id_a<TAB>id_b<TAB>score'")
        try:
            pairs.append(SimilarityPair(parts[0], parts[1], float(parts[2])))
        except ValueError as exc:
            raise CorpusIoError(f"{path}:{line_no}: bad pair row: {exc}") from exc
    return pairs


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CorpusIoError(f"cannot write {path}: {exc}") from exc


def fetch_code(
    endpoint: str,
    address: str,
    timeout: float = 10.0,
    retries: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> RemoteCode:
    """Fetch deployed runtime code for an address over the node's JSON-RPC.

    Transport failures are retried with exponential backoff before giving
    up; responses that arrive but do not look like a code reply fail fast.
    """
    normalized = _normalize_address(address, "address")
    payload = {
        "jsonrpc": "2.0",
        "method": "eth_getCode",
        "params": [normalized, "latest"],
        "id": 1,
    }
    last_error: Exception | None = None
    for attempt in range(retries):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            response = requests.post(endpoint, json=payload, timeout=timeout)
            response.raise_for_status()
        except requests.RequestException as exc:
            last_error = exc
            logger.warning("eth_getCode attempt %d/%d failed: %s", attempt + 1, retries, exc)
            continue
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON RPC response from {endpoint}") from exc
        if not isinstance(body, dict) or ("result" not in body and "error" not in body):
            raise ProtocolError(f"malformed RPC response from {endpoint}")
        if "error" in body:
            raise ProtocolError(f"RPC error from {endpoint}: {body['error']}")
        result = body["result"]
        if not isinstance(result, str) or not result.startswith("0x"):
            raise ProtocolError(f"unexpected eth_getCode result {result!r}")
        try:
            code = bytes.fromhex(result[2:])
        except ValueError as exc:
            raise ProtocolError(f"undecodable eth_getCode result {result!r}") from exc
        remote = RemoteCode(normalized, code)
        if remote.is_eoa_or_destroyed:
            logger.warning("address %s has no code: EOA or destroyed contract", normalized)
        return remote
    raise RpcError(f"eth_getCode failed after {retries} attempts: {last_error}")
