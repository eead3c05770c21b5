from __future__ import annotations

import json
from pathlib import Path

import pytest

import synth
from evmclone.corpus import (
    build_manifest,
    fetch_code,
    fingerprint_record,
    import_records,
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
from evmclone.errors import CorpusIoError, ProtocolError, RpcError, VersionError
from evmclone.evm import dedup
from evmclone.similarity import SimilarityPair

ADDR = synth.address


def _corpus_line(n: int, bytecode: str = "0x6001600101", **overrides) -> str:
    entry = {
        "address": ADDR(n),
        "deployer": ADDR(500 + n),
        "creation_kind": "user_created",
        "bytecode": bytecode,
        "deployed_at": 1_600_000_000 + n,
    }
    entry.update(overrides)
    return json.dumps(entry)


def test_import_well_formed(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(_corpus_line(i) for i in range(3)) + "\n")
    records, issues = import_records(path)
    assert len(records) == 3
    assert issues == []
    assert records[0].id == ADDR(0)
    assert records[0].deployer == ADDR(500)


def test_import_malformed_hex_collected(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    lines = [_corpus_line(0), _corpus_line(1, bytecode="0xZZ"), _corpus_line(2)]
    path.write_text("\n".join(lines) + "\n")
    records, issues = import_records(path)
    assert len(records) == 2
    assert len(issues) == 1
    assert issues[0].line_no == 2


def test_import_empty_file(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("")
    assert import_records(path) == ([], [])


def test_import_flags_bad_entries(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    lines = [
        "not json",
        json.dumps({"address": ADDR(1)}),  # missing fields
        _corpus_line(2, creation_kind="mystery"),
        _corpus_line(3, bytecode="0x"),
        _corpus_line(4, address="0x1234"),
        _corpus_line(5, deployed_at="2018-07-01T00:00:00+00:00"),
    ]
    path.write_text("\n".join(lines) + "\n")
    records, issues = import_records(path)
    assert len(records) == 1
    assert records[0].deployed_at == 1530403200
    assert {i.line_no for i in issues} == {1, 2, 3, 4, 5}


def test_import_unreadable_file(tmp_path: Path):
    with pytest.raises(CorpusIoError):
        import_records(tmp_path / "missing.jsonl")


def test_import_is_deterministic(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    lines = [_corpus_line(0), _corpus_line(1, bytecode="0xZZ"), _corpus_line(2)]
    path.write_text("\n".join(lines) + "\n")
    assert import_records(path) == import_records(path)


def test_manifest_counts(tmp_path: Path):
    path = tmp_path / "corpus.jsonl"
    lines = [_corpus_line(0), _corpus_line(1, creation_kind="contract_created"), _corpus_line(2)]
    path.write_text("\n".join(lines) + "\n")
    records, _ = import_records(path)
    manifest = build_manifest(records, str(path))
    assert manifest.record_count == 3
    assert manifest.kind_counts == {"user_created": 2, "contract_created": 1}


def _db_records(count: int = 30):
    records, _ = synth.template_corpus(seed=19, copies_per_template=max(1, count // 5))
    result = dedup(records)
    return [fingerprint_record(d) for d in result.distinct]


def test_db_round_trip(tmp_path: Path):
    records = _db_records()
    path = tmp_path / "fpdb.jsonl"
    save_db(path, records)
    assert load_db(path) == records


def test_db_version_mismatch(tmp_path: Path):
    records = _db_records()
    path = tmp_path / "fpdb.jsonl"
    save_db(path, records)
    lines = path.read_text().splitlines()
    lines[0] = json.dumps({"format_version": 99, "kind": "fingerprint-db"})
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(VersionError):
        load_db(path)


def test_db_rejects_foreign_files(tmp_path: Path):
    path = tmp_path / "other.jsonl"
    path.write_text('{"hello": 1}\n')
    with pytest.raises(VersionError):
        load_db(path)
    (tmp_path / "empty.jsonl").write_text("")
    with pytest.raises(VersionError):
        load_db(tmp_path / "empty.jsonl")


def test_db_concurrent_readers_see_identical_records(tmp_path: Path):
    from concurrent.futures import ThreadPoolExecutor

    records = _db_records()
    path = tmp_path / "fpdb.jsonl"
    save_db(path, records)
    with ThreadPoolExecutor(max_workers=4) as pool:
        reads = list(pool.map(load_db, [path] * 4))
    assert all(read == records for read in reads)


def test_groups_round_trip(tmp_path: Path):
    records, _ = synth.template_corpus(seed=20)
    result = dedup(records)
    path = tmp_path / "groups.jsonl"
    save_groups(path, result)
    loaded = load_groups(path)
    assert {g["token_hash"] for g in loaded} == set(result.duplicate_groups)
    by_hash = {g["token_hash"]: g for g in loaded}
    for token_hash, members in result.duplicate_groups.items():
        assert by_hash[token_hash]["members"] == members
        assert by_hash[token_hash]["representative"] == members[0]


def test_templates_loader(tmp_path: Path):
    path = tmp_path / "templates.tsv"
    path.write_text("# token_hash\tname\n" + "aa" * 32 + "\tERC-20 base\n")
    templates = load_templates(path)
    assert templates == {b"\xaa" * 32: "ERC-20 base"}
    (tmp_path / "bad.tsv").write_text("zz\tname\n")
    with pytest.raises(CorpusIoError):
        load_templates(tmp_path / "bad.tsv")


def test_vulns_loader(tmp_path: Path):
    path = tmp_path / "vulns.tsv"
    path.write_text(
        "# contract\ttype\tcount\n"
        f"{ADDR(1)}\toverflow\t2\n"
        f"{ADDR(1)}\treentrancy\t1\n"
        f"{ADDR(1)}\toverflow\t1\n"
        f"{ADDR(2)}\terc20_related\t1\n"
    )
    profiles = load_vulns(path)
    assert profiles[ADDR(1)].normalized() == {"overflow": 3, "reentrancy": 1}
    assert profiles[ADDR(2)].normalized() == {"erc20_related": 1}

    (tmp_path / "unknown.tsv").write_text(f"{ADDR(1)}\tsolar_flare\t1\n")
    with pytest.raises(CorpusIoError):
        load_vulns(tmp_path / "unknown.tsv")
    (tmp_path / "badcount.tsv").write_text(f"{ADDR(1)}\toverflow\tmany\n")
    with pytest.raises(CorpusIoError):
        load_vulns(tmp_path / "badcount.tsv")


def test_dapps_loader(tmp_path: Path):
    path = tmp_path / "dapps.jsonl"
    entry = {
        "name": "Fomo-ish",
        "contracts": [ADDR(1), ADDR(2)],
        "deployers": [ADDR(900)],
        "volume": 123.456,
        "deployed_at": "2018-08-01T00:00:00+00:00",
        "category": "game",
    }
    path.write_text(json.dumps(entry) + "\n")
    dapps = load_dapps(path)
    assert dapps[0].name == "Fomo-ish"
    assert dapps[0].contracts == (ADDR(1), ADDR(2))
    assert dapps[0].volume == 123.456

    (tmp_path / "bad.jsonl").write_text(json.dumps({"name": "x", "contracts": []}) + "\n")
    with pytest.raises(CorpusIoError):
        load_dapps(tmp_path / "bad.jsonl")


def test_pairs_round_trip(tmp_path: Path):
    pairs = [SimilarityPair(ADDR(1), ADDR(2), 88.0), SimilarityPair(ADDR(3), ADDR(4), 70.5)]
    path = tmp_path / "pairs.tsv"
    save_pairs(path, pairs, timestamp=False)
    assert load_pairs(path) == pairs
    text = path.read_text()
    assert "88.0" in text and "70.5" in text
    assert not text.startswith("#")
    save_pairs(path, pairs, timestamp=True)
    assert path.read_text().startswith("# generated ")
    assert load_pairs(path) == pairs


def test_fetch_code_known_contract(rpc_server):
    rpc_server.handler.codes[ADDR(7)] = "0x6001600101"
    remote = fetch_code(rpc_server.url, ADDR(7))
    assert remote.code == bytes.fromhex("6001600101")
    assert not remote.is_eoa_or_destroyed


def test_fetch_code_eoa_flagged(rpc_server):
    remote = fetch_code(rpc_server.url, ADDR(8))
    assert remote.code == b""
    assert remote.is_eoa_or_destroyed


def test_fetch_code_retries_then_succeeds(rpc_server):
    rpc_server.handler.codes[ADDR(9)] = "0x00"
    rpc_server.handler.fail_next = 2
    naps: list[float] = []
    remote = fetch_code(rpc_server.url, ADDR(9), retries=3, backoff=0.01, sleep=naps.append)
    assert remote.code == b"\x00"
    assert len(naps) == 2


def test_fetch_code_exhausts_retries(rpc_server):
    rpc_server.handler.fail_next = 10
    with pytest.raises(RpcError):
        fetch_code(rpc_server.url, ADDR(9), retries=3, backoff=0.0, sleep=lambda _: None)


def test_fetch_code_unreachable_endpoint():
    with pytest.raises(RpcError):
        fetch_code("http://127.0.0.1:1", ADDR(1), retries=2, backoff=0.0, sleep=lambda _: None)


def test_fetch_code_malformed_response(rpc_server):
    rpc_server.handler.garbage = True
    with pytest.raises(ProtocolError):
        fetch_code(rpc_server.url, ADDR(1))


def test_fetch_code_normalizes_address(rpc_server):
    mixed = ADDR(7).upper().replace("0X", "0x")
    rpc_server.handler.codes[ADDR(7)] = "0x00"
    remote = fetch_code(rpc_server.url, mixed)
    assert remote.address == ADDR(7)
