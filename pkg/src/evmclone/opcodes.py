"""EVM opcode table: byte values, mnemonics, and push-immediate widths."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Opcode:
    """A single entry of the opcode table."""

    mnemonic: str
    byte_value: int
    immediate_len: int = 0

    def __str__(self) -> str:
        return self.mnemonic


PUSH1 = 0x60
PUSH32 = 0x7F

STOP = 0x00
JUMP = 0x56
JUMPI = 0x57
RETURN = 0xF3
REVERT = 0xFD
INVALID = 0xFE

# Opcodes that terminate a code piece (basic-block style cut points).
TRIGGER_OPCODES: frozenset[int] = frozenset({STOP, JUMP, JUMPI, RETURN, REVERT})

_NAMED: dict[int, str] = {
    0x00: "STOP",
    0x01: "ADD",
    0x02: "MUL",
    0x03: "SUB",
    0x04: "DIV",
    0x05: "SDIV",
    0x06: "MOD",
    0x07: "SMOD",
    0x08: "ADDMOD",
    0x09: "MULMOD",
    0x0A: "EXP",
    0x0B: "SIGNEXTEND",
    0x10: "LT",
    0x11: "GT",
    0x12: "SLT",
    0x13: "SGT",
    0x14: "EQ",
    0x15: "ISZERO",
    0x16: "AND",
    0x17: "OR",
    0x18: "XOR",
    0x19: "NOT",
    0x1A: "BYTE",
    0x1B: "SHL",
    0x1C: "SHR",
    0x1D: "SAR",
    0x20: "SHA3",
    0x30: "ADDRESS",
    0x31: "BALANCE",
    0x32: "ORIGIN",
    0x33: "CALLER",
    0x34: "CALLVALUE",
    0x35: "CALLDATALOAD",
    0x36: "CALLDATASIZE",
    0x37: "CALLDATACOPY",
    0x38: "CODESIZE",
    0x39: "CODECOPY",
    0x3A: "GASPRICE",
    0x3B: "EXTCODESIZE",
    0x3C: "EXTCODECOPY",
    0x3D: "RETURNDATASIZE",
    0x3E: "RETURNDATACOPY",
    0x3F: "EXTCODEHASH",
    0x40: "BLOCKHASH",
    0x41: "COINBASE",
    0x42: "TIMESTAMP",
    0x43: "NUMBER",
    0x44: "DIFFICULTY",
    0x45: "GASLIMIT",
    0x46: "CHAINID",
    0x47: "SELFBALANCE",
    0x48: "BASEFEE",
    0x49: "BLOBHASH",
    0x4A: "BLOBBASEFEE",
    0x50: "POP",
    0x51: "MLOAD",
    0x52: "MSTORE",
    0x53: "MSTORE8",
    0x54: "SLOAD",
    0x55: "SSTORE",
    0x56: "JUMP",
    0x57: "JUMPI",
    0x58: "PC",
    0x59: "MSIZE",
    0x5A: "GAS",
    0x5B: "JUMPDEST",
    0x5C: "TLOAD",
    0x5D: "TSTORE",
    0x5E: "MCOPY",
    0x5F: "PUSH0",
    0xF0: "CREATE",
    0xF1: "CALL",
    0xF2: "CALLCODE",
    0xF3: "RETURN",
    0xF4: "DELEGATECALL",
    0xF5: "CREATE2",
    0xFA: "STATICCALL",
    0xFD: "REVERT",
    0xFE: "INVALID",
    0xFF: "SELFDESTRUCT",
}


def _build_table() -> dict[int, Opcode]:
    table = {value: Opcode(name, value) for value, name in _NAMED.items()}
    for n in range(1, 33):
        value = PUSH1 + n - 1
        table[value] = Opcode(f"PUSH{n}", value, immediate_len=n)
    for n in range(1, 17):
        table[0x80 + n - 1] = Opcode(f"DUP{n}", 0x80 + n - 1)
        table[0x90 + n - 1] = Opcode(f"SWAP{n}", 0x90 + n - 1)
    for n in range(5):
        table[0xA0 + n] = Opcode(f"LOG{n}", 0xA0 + n)
    return table


OPCODE_TABLE: dict[int, Opcode] = _build_table()

# Unassigned byte values decode as INVALID but keep their own byte value so
# distinct invalid regions still tokenize deterministically.
_UNKNOWN_CACHE: dict[int, Opcode] = {}


def opcode_for(byte_value: int) -> Opcode:
    """Look up the opcode for a byte value, synthesizing INVALID for gaps."""
    op = OPCODE_TABLE.get(byte_value)
    if op is not None:
        return op
    op = _UNKNOWN_CACHE.get(byte_value)
    if op is None:
        op = Opcode("INVALID", byte_value)
        _UNKNOWN_CACHE[byte_value] = op
    return op


def is_push(byte_value: int) -> bool:
    return PUSH1 <= byte_value <= PUSH32
