"""Bit-field layout of 32-bit RISC-V instruction words.

Every named field maps to one or more segments ``(word_hi, word_lo, value_lo)``: word bits
``[word_hi:word_lo]`` carry value bits starting at ``value_lo``. Immediate fields use the
scattered layouts of the S, B and J formats.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple


class SlotKind(str, Enum):
    """Kind of operand carried by a field."""

    REG = "reg"
    IMM = "imm"
    CSR = "csr"
    RM = "rm"
    FIXED = "fixed"


@dataclass(frozen=True)
class FieldSpec:
    """One logical field of an instruction word."""

    name: str
    segments: Tuple[Tuple[int, int, int], ...]
    width: int
    signed: bool = False
    align: int = 1
    kind: SlotKind = SlotKind.FIXED

    @property
    def word_mask(self) -> int:
        mask = 0
        for hi, lo, _ in self.segments:
            mask |= ((1 << (hi - lo + 1)) - 1) << lo
        return mask

    def value_range(self) -> Tuple[int, int]:
        """Inclusive range of encodable operand values."""
        if self.signed:
            return -(1 << (self.width - 1)), (1 << (self.width - 1)) - 1
        return 0, (1 << self.width) - 1

    def scatter(self, value: int) -> int:
        """Place an (already range-checked) value into word bits."""
        raw = value & ((1 << self.width) - 1)
        word = 0
        for hi, lo, value_lo in self.segments:
            span = hi - lo + 1
            word |= ((raw >> value_lo) & ((1 << span) - 1)) << lo
        return word

    def gather(self, word: int) -> int:
        """Extract the operand value from word bits."""
        raw = 0
        for hi, lo, value_lo in self.segments:
            span = hi - lo + 1
            raw |= ((word >> lo) & ((1 << span) - 1)) << value_lo
        if self.signed and raw & (1 << (self.width - 1)):
            raw -= 1 << self.width
        return raw


def _plain(name: str, hi: int, lo: int, kind: SlotKind = SlotKind.FIXED) -> FieldSpec:
    return FieldSpec(name, ((hi, lo, 0),), hi - lo + 1, kind=kind)


FIELDS: Dict[str, FieldSpec] = {
    "opcode": _plain("opcode", 6, 0),
    "funct3": _plain("funct3", 14, 12),
    "funct7": _plain("funct7", 31, 25),
    "funct6": _plain("funct6", 31, 26),
    "funct5": _plain("funct5", 31, 27),
    "funct2": _plain("funct2", 26, 25),
    "funct12": _plain("funct12", 31, 20),
    "aq": _plain("aq", 26, 26),
    "rl": _plain("rl", 25, 25),
    "rd": _plain("rd", 11, 7, SlotKind.REG),
    "rs1": _plain("rs1", 19, 15, SlotKind.REG),
    "rs2": _plain("rs2", 24, 20, SlotKind.REG),
    "rs3": _plain("rs3", 31, 27, SlotKind.REG),
    "rm": _plain("rm", 14, 12, SlotKind.RM),
    "csr": _plain("csr", 31, 20, SlotKind.CSR),
    "uimm": _plain("uimm", 19, 15, SlotKind.IMM),
    "shamt": _plain("shamt", 25, 20, SlotKind.IMM),
    "shamt5": _plain("shamt5", 24, 20, SlotKind.IMM),
    "imm_i": FieldSpec("imm_i", ((31, 20, 0),), 12, signed=True, kind=SlotKind.IMM),
    "imm_s": FieldSpec(
        "imm_s", ((31, 25, 5), (11, 7, 0)), 12, signed=True, kind=SlotKind.IMM
    ),
    "imm_b": FieldSpec(
        "imm_b",
        ((31, 31, 12), (30, 25, 5), (11, 8, 1), (7, 7, 11)),
        13,
        signed=True,
        align=2,
        kind=SlotKind.IMM,
    ),
    "imm_u": FieldSpec("imm_u", ((31, 12, 0),), 20, kind=SlotKind.IMM),
    "imm_j": FieldSpec(
        "imm_j",
        ((31, 31, 20), (30, 21, 1), (20, 20, 11), (19, 12, 12)),
        21,
        signed=True,
        align=2,
        kind=SlotKind.IMM,
    ),
}

# Operand name "imm" resolves to the format's immediate field.
IMM_FIELD_BY_FORMAT = {
    "I": "imm_i",
    "S": "imm_s",
    "B": "imm_b",
    "U": "imm_u",
    "J": "imm_j",
}
