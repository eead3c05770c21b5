"""Piece-wise fuzzy fingerprints of tokenized runtime code.

Tokenized code is cut at control-transfer opcodes so every piece matches a
basic-block shaped region, each piece hashes to a single base-64 character,
and the concatenation forms the contract fingerprint. A local edit changes
only the characters of the touched pieces; the rest of the string is stable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyBytecodeError
from .evm import TokenizedCode
from .opcodes import TRIGGER_OPCODES

# Bump when the piece hash or the alphabet changes; persisted fingerprints
# carry this tag and refuse to load across versions.
FORMAT_VERSION = 1

BASE64_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"

_FNV_OFFSET_BASIS = 0x811C9DC5
_FNV_PRIME = 0x01000193


@dataclass(frozen=True)
class TriggerSet:
    """Opcode byte values that terminate a piece."""

    opcodes: frozenset[int] = TRIGGER_OPCODES


DEFAULT_TRIGGERS = TriggerSet()


@dataclass(frozen=True)
class Fingerprint:
    """Base-64 string with one character per code piece."""

    chars: str

    @property
    def piece_count(self) -> int:
        return len(self.chars)

    def __str__(self) -> str:
        return self.chars


def fnv1a32(data: bytes) -> int:
    """32-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET_BASIS
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def cut_pieces(tokenized: TokenizedCode, tv: TriggerSet = DEFAULT_TRIGGERS) -> list[bytes]:
    """Cut tokenized code into pieces ending at trigger opcodes.

    Pieces concatenate back to the input; a trailing run without a trigger
    still forms a final piece so distinct tails stay distinguishable.
    """
    triggers = tv.opcodes
    pieces: list[bytes] = []
    start = 0
    data = tokenized.opcode_bytes
    for i, b in enumerate(data):
        if b in triggers:
            pieces.append(data[start : i + 1])
            start = i + 1
    if start < len(data):
        pieces.append(data[start:])
    return pieces


def piece_char(piece: bytes) -> str:
    """Map one piece to its base-64 character."""
    return BASE64_ALPHABET[fnv1a32(piece) % 64]


def generate_fp(tokenized: TokenizedCode, tv: TriggerSet = DEFAULT_TRIGGERS) -> Fingerprint:
    """Fingerprint tokenized runtime code: one character per piece, in order."""
    if not tokenized.opcode_bytes:
        raise EmptyBytecodeError("cannot fingerprint empty tokenized code")
    return Fingerprint("".join(piece_char(piece) for piece in cut_pieces(tokenized, tv)))
