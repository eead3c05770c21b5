"""Bytecode decoding, creation/runtime/metadata segmentation, tokenization, dedup.

The pipeline entry point for a raw contract is :func:`preprocess`, which
splits off creation code, drops the storage-metadata tail, and returns the
runtime code that every downstream stage works on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import EmptyBytecodeError, SplitNotFoundError
from .opcodes import TRIGGER_OPCODES, Opcode, opcode_for

# Deploy stubs end with PUSH1 0x00, RETURN, STOP.
CREATION_END_MARKER = bytes.fromhex("6000f300")

# Storage-metadata tail: LOG1, PUSH6 "bzzr0X" leader, hash bytes, 0x0029 trailer.
SWARM_LEADER = bytes.fromhex("a165627a7a723058")
SWARM_TRAILER = bytes.fromhex("0029")
# Conventional byte count between the two-byte 0xa165 head and the trailer.
SWARM_STANDARD_INNER_LEN = 41

INPUT_KINDS = ("auto", "runtime", "creation")


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction: opcode plus any push immediate."""

    offset: int
    opcode: Opcode
    immediate: bytes = b""
    truncated: bool = False

    @property
    def size(self) -> int:
        return 1 + self.opcode.immediate_len

    def encode(self) -> bytes:
        return bytes([self.opcode.byte_value]) + self.immediate

    def listing_line(self) -> str:
        text = f"{self.offset:#06x}: {self.opcode.mnemonic}"
        if self.opcode.immediate_len:
            text += f" 0x{self.immediate.hex()}"
        if self.truncated:
            text += "  (truncated)"
        return text


@dataclass(frozen=True)
class ContractRecord:
    """One on-chain contract as ingested from a corpus file."""

    id: str
    deployer: str
    creation_kind: str
    raw_bytecode: bytes
    deployed_at: int | None = None


@dataclass(frozen=True)
class SwarmTail:
    """Metadata tail removed from the end of runtime code."""

    data: bytes
    nonstandard_length: bool


@dataclass(frozen=True)
class TokenizedCode:
    """Runtime code reduced to its opcode byte sequence."""

    opcode_bytes: bytes
    opcode_count: int
    block_count: int
    runtime_byte_len: int
    runtime_hash: bytes
    token_hash: bytes
    truncated_tail: bool = False


@dataclass(frozen=True)
class DistinctContract:
    """Representative contract for one token-hash equivalence class."""

    record: ContractRecord
    tokenized: TokenizedCode


@dataclass
class DedupResult:
    distinct: list[DistinctContract] = field(default_factory=list)
    # token_hash -> all member contract ids, representative first
    duplicate_groups: dict[bytes, list[str]] = field(default_factory=dict)


def parse_hex(text: str) -> bytes:
    """Parse a hex bytecode string, tolerating an 0x prefix and surrounding space."""
    cleaned = text.strip()
    if cleaned[:2].lower() == "0x":
        cleaned = cleaned[2:]
    try:
        return bytes.fromhex(cleaned)
    except ValueError as exc:
        raise ValueError(f"invalid hex bytecode: {exc}") from exc


def decode(bytecode: bytes) -> list[Instruction]:
    """Decode raw bytecode into instructions, consuming every byte exactly once.

    A push whose immediate runs past the end of input is zero-padded and
    marked truncated instead of rejected; such tails occur in deployed code.
    """
    if not bytecode:
        raise EmptyBytecodeError("cannot decode empty bytecode")
    instructions: list[Instruction] = []
    i = 0
    end = len(bytecode)
    while i < end:
        opcode = opcode_for(bytecode[i])
        width = opcode.immediate_len
        if width:
            immediate = bytecode[i + 1 : i + 1 + width]
            truncated = len(immediate) < width
            if truncated:
                immediate = immediate.ljust(width, b"\x00")
            instructions.append(Instruction(i, opcode, immediate, truncated))
        else:
            instructions.append(Instruction(i, opcode))
        i += 1 + width
    return instructions


def encode(instructions: list[Instruction]) -> bytes:
    """Inverse of :func:`decode` for streams without truncated pushes."""
    return b"".join(ins.encode() for ins in instructions)


def split_swarm(code: bytes) -> tuple[bytes, SwarmTail | None]:
    """Split off the trailing metadata region, if one is present.

    The tail must start with the well-known leader bytes and the input must
    end with the trailer bytes; anything else is returned unchanged. The
    last leader occurrence wins so that leader bytes inside the hash itself
    cannot leave residue behind.
    """
    if not code.endswith(SWARM_TRAILER):
        return code, None
    pos = code.rfind(SWARM_LEADER)
    if pos < 0:
        return code, None
    tail = code[pos:]
    inner_len = len(tail) - 2 - len(SWARM_TRAILER)
    return code[:pos], SwarmTail(tail, inner_len != SWARM_STANDARD_INNER_LEN)


def strip_swarm(code: bytes) -> bytes:
    """Return the code without its metadata tail; idempotent."""
    body, _ = split_swarm(code)
    return body


def split_creation(full: bytes) -> tuple[bytes, bytes]:
    """Split full deployment bytecode into (creation, runtime).

    The cut is the first occurrence of the deploy-return byte sequence that
    falls on a decoded instruction boundary; matches buried inside push
    immediates do not split. Without a match the whole input is runtime.
    """
    if not full:
        raise EmptyBytecodeError("cannot split empty bytecode")
    for ins in decode(full):
        if full[ins.offset : ins.offset + 4] == CREATION_END_MARKER:
            cut = ins.offset + 4
            return full[:cut], full[cut:]
    return b"", full


def preprocess(bytecode: bytes, kind: str = "auto") -> bytes:
    """Reduce raw bytecode to swarm-stripped runtime code.

    kind selects how the input is interpreted: "auto" splits creation code
    off when the deploy-return marker is found, "runtime" skips splitting,
    and "creation" requires the marker to be present.
    """
    if kind not in INPUT_KINDS:
        raise ValueError(f"unknown input kind {kind!r}; expected one of {INPUT_KINDS}")
    if kind == "runtime":
        runtime = bytecode
    else:
        creation, runtime = split_creation(bytecode)
        if kind == "creation" and not creation:
            raise SplitNotFoundError("no deploy-return boundary found in creation code")
    return strip_swarm(runtime)


def count_blocks(opcode_bytes: bytes, triggers: frozenset[int] = TRIGGER_OPCODES) -> int:
    """Number of pieces the stream cuts into: one per trigger, plus any residue."""
    blocks = 0
    open_piece = False
    for b in opcode_bytes:
        open_piece = True
        if b in triggers:
            blocks += 1
            open_piece = False
    return blocks + (1 if open_piece else 0)


def tokenize(runtime: bytes) -> TokenizedCode:
    """Reduce runtime code to one byte per instruction by dropping push immediates."""
    if not runtime:
        raise EmptyBytecodeError("cannot tokenize empty runtime code")
    instructions = decode(runtime)
    opcode_bytes = bytes(ins.opcode.byte_value for ins in instructions)
    return TokenizedCode(
        opcode_bytes=opcode_bytes,
        opcode_count=len(instructions),
        block_count=count_blocks(opcode_bytes),
        runtime_byte_len=len(runtime),
        runtime_hash=hashlib.sha256(runtime).digest(),
        token_hash=hashlib.sha256(opcode_bytes).digest(),
        truncated_tail=instructions[-1].truncated,
    )


def _representative_key(record: ContractRecord) -> tuple[float, str]:
    # Earliest deployment wins; unknown timestamps sort last; ties go to the
    # lexicographically smallest address.
    deployed = record.deployed_at if record.deployed_at is not None else float("inf")
    return (deployed, record.id)


def dedup(corpus: list[ContractRecord], kind: str = "auto") -> DedupResult:
    """Partition a corpus into token-hash equivalence classes.

    Contracts that differ only in push immediates, metadata tails, or
    creation code collapse into one group. Each group is represented by its
    earliest-deployed member.
    """
    groups: dict[bytes, list[tuple[ContractRecord, TokenizedCode]]] = {}
    for record in corpus:
        code = tokenize(preprocess(record.raw_bytecode, kind))
        groups.setdefault(code.token_hash, []).append((record, code))

    result = DedupResult()
    for token_hash in sorted(groups):
        members = sorted(groups[token_hash], key=lambda pair: _representative_key(pair[0]))
        representative, code = members[0]
        result.distinct.append(DistinctContract(representative, code))
        result.duplicate_groups[token_hash] = [record.id for record, _ in members]
    return result
