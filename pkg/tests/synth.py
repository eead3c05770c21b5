"""Synthetic bytecode and corpus builders with known ground truth."""

from __future__ import annotations

import json
import random
from pathlib import Path

from evmclone.evm import ContractRecord

# Single-byte opcodes that are neither triggers nor pushes; safe fillers.
FILLER_OPS = [
    0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x08, 0x09, 0x0A, 0x0B,
    0x10, 0x11, 0x14, 0x15, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x1B,
    0x33, 0x34, 0x35, 0x50, 0x51, 0x52, 0x80, 0x81, 0x90, 0x91,
]

JUMP = 0x56
PUSH1 = 0x60
PUSH2 = 0x61

SWARM_LEADER = bytes.fromhex("a165627a7a723058")
SWARM_TRAILER = bytes.fromhex("0029")


def address(n: int) -> str:
    return f"0x{n:040x}"


def swarm_tail(rng: random.Random, inner_after_leader: int = 35) -> bytes:
    """A metadata tail; 35 hash bytes keep the conventional inner length of 41."""
    body = bytes(rng.choice(range(0x00, 0xA0)) for _ in range(inner_after_leader))
    return SWARM_LEADER + body + SWARM_TRAILER


def creation_stub(rng: random.Random, n_instr: int = 6) -> bytes:
    """A deploy stub whose only split marker is its final four bytes.

    Immediates avoid 0x60 so the marker byte sequence cannot appear early,
    even spanning instruction boundaries.
    """
    safe_immediates = [b for b in range(1, 0x5F) if b != 0x00]
    stub = bytearray()
    for _ in range(n_instr):
        stub.append(PUSH2)
        stub.append(rng.choice(safe_immediates))
        stub.append(rng.choice(safe_immediates))
    return bytes(stub) + bytes.fromhex("6000f300")


def random_runtime(rng: random.Random, n_instr: int = 60) -> bytes:
    """Random but decodable runtime code mixing fillers, pushes, and jumps."""
    out = bytearray()
    for _ in range(n_instr):
        roll = rng.random()
        if roll < 0.25:
            width = rng.randint(1, 4)
            out.append(PUSH1 + width - 1)
            out.extend(rng.randrange(256) for _ in range(width))
        elif roll < 0.35:
            out.append(JUMP)
        else:
            out.append(rng.choice(FILLER_OPS))
    return bytes(out)


def piece(filler: int, immediate: int = 0x01) -> bytes:
    """One four-instruction piece: PUSH1 x, <filler>, PUSH1 x, JUMP."""
    return bytes([PUSH1, immediate, filler, PUSH1, immediate, JUMP])


def template_pieces(rng: random.Random, n_pieces: int) -> list[bytes]:
    return [piece(rng.choice(FILLER_OPS)) for _ in range(n_pieces)]


def apply_variant(pieces: list[bytes], variant: int) -> list[bytes]:
    """Structural variant v rewrites v pieces' filler opcodes in place.

    Variant 0 is the template itself. Touched pieces stay under 10% of the
    piece count for every template size used in the fixtures.
    """
    mutated = list(pieces)
    for k in range(variant):
        position = (7 * (k + 1)) % len(pieces)
        original = mutated[position]
        replacement = FILLER_OPS[(FILLER_OPS.index(original[2]) + variant + k) % len(FILLER_OPS)]
        mutated[position] = original[:2] + bytes([replacement]) + original[3:]
    return mutated


def rewrite_immediates(code: bytes, rng: random.Random) -> bytes:
    """Replace every push immediate with fresh random bytes of the same width."""
    out = bytearray()
    i = 0
    while i < len(code):
        op = code[i]
        out.append(op)
        i += 1
        if PUSH1 <= op <= 0x7F:
            width = op - PUSH1 + 1
            out.extend(rng.randrange(256) for _ in range(width))
            i += width
    return bytes(out)


TEMPLATE_PIECE_COUNTS = (40, 60, 90, 135, 200)


def template_corpus(
    seed: int = 7,
    copies_per_template: int = 20,
    variants: int = 4,
    with_wrapping: bool = True,
) -> tuple[list[ContractRecord], dict[int, int]]:
    """A corpus of mutated template copies with known group membership.

    Returns the records plus a map from record index to template index.
    Copies of one template differ in push immediates (token-identical) and
    in up to ``variants - 1`` structurally rewritten pieces, so each
    template yields exactly ``variants`` distinct contracts that are all
    mutually similar. Templates have piece counts far enough apart that
    cross-template pairs are pruned by the meta filter.
    """
    rng = random.Random(seed)
    bases = [template_pieces(rng, n) for n in TEMPLATE_PIECE_COUNTS]
    records: list[ContractRecord] = []
    truth: dict[int, int] = {}
    index = 0
    for t, base in enumerate(bases):
        for copy in range(copies_per_template):
            body = b"".join(apply_variant(base, copy % variants))
            body = rewrite_immediates(body, rng)
            raw = body
            if with_wrapping:
                raw = creation_stub(rng) + body + swarm_tail(rng)
            records.append(
                ContractRecord(
                    id=address(index + 1),
                    deployer=address(1000 + index),
                    creation_kind="user_created",
                    raw_bytecode=raw,
                    deployed_at=1_500_000_000 + index * 3600,
                )
            )
            truth[index] = t
            index += 1
    return records, truth


def write_corpus_file(path: Path, records: list[ContractRecord]) -> Path:
    lines = []
    for record in records:
        lines.append(
            json.dumps(
                {
                    "address": record.id,
                    "deployer": record.deployer,
                    "creation_kind": record.creation_kind,
                    "bytecode": "0x" + record.raw_bytecode.hex(),
                    "deployed_at": record.deployed_at,
                }
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
