"""Small assembler helpers: encode by mnemonic, materialize constants, resolve labels."""

from typing import Dict, List, Optional, Tuple

from ..validation import ConfigurationError
from .encoding import Instruction
from .library import InstructionLibrary, default_library

ABI_NAMES: Dict[str, int] = {
    "zero": 0, "ra": 1, "sp": 2, "gp": 3, "tp": 4,
    "t0": 5, "t1": 6, "t2": 7, "s0": 8, "s1": 9,
    "a0": 10, "a1": 11, "a2": 12, "a3": 13, "a4": 14, "a5": 15, "a6": 16, "a7": 17,
    "s2": 18, "s3": 19, "s4": 20, "s5": 21, "s6": 22, "s7": 23, "s8": 24, "s9": 25,
    "s10": 26, "s11": 27, "t3": 28, "t4": 29, "t5": 30, "t6": 31,
}  # fmt: skip


def reg(name: str | int) -> int:
    """Register number from an ABI name, ``xN``/``fN`` or an int."""
    if isinstance(name, int):
        return name
    if name in ABI_NAMES:
        return ABI_NAMES[name]
    if name[:1] in ("x", "f") and name[1:].isdigit():
        return int(name[1:])
    raise ConfigurationError(f"unknown register {name}", config_key="register")


def asm(mnemonic: str, library: Optional[InstructionLibrary] = None, **operands: int | str) -> Instruction:
    """Build an instruction by mnemonic; register operands accept ABI names."""
    template = (library or default_library()).get(mnemonic)
    values = {
        key: reg(value) if isinstance(value, str) else value for key, value in operands.items()
    }
    return Instruction.of(template, _with_defaults(template.slot_names, values))


def _with_defaults(slots: Tuple[str, ...], values: Dict[str, int]) -> Dict[str, int]:
    unknown = set(values) - set(slots)
    if unknown:
        raise ConfigurationError(f"unexpected operands {sorted(unknown)}", config_key="operands")
    return {name: values.get(name, 0) for name in slots}


def nop() -> Instruction:
    return asm("addi", rd=0, rs1=0, imm=0)


def _sext(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value & (1 << (bits - 1)) else value


def load_immediate(rd: int, value: int) -> List[Instruction]:
    """Instructions that leave the 64-bit ``value`` in ``rd``."""
    value = _sext(value, 64)
    if -(1 << 31) <= value < (1 << 31):
        lo12 = _sext(value, 12)
        hi20 = ((value - lo12) >> 12) & 0xFFFFF
        if hi20 == 0:
            return [asm("addi", rd=rd, rs1=0, imm=lo12)]
        seq = [asm("lui", rd=rd, imm=hi20)]
        if lo12:
            seq.append(asm("addiw", rd=rd, rs1=rd, imm=lo12))
        return seq
    lo12 = _sext(value, 12)
    hi = (value - lo12) >> 12
    shift = 12
    while hi & 1 == 0:
        hi >>= 1
        shift += 1
    seq = load_immediate(rd, hi)
    seq.append(asm("slli", rd=rd, rs1=rd, shamt=shift))
    if lo12:
        seq.append(asm("addi", rd=rd, rs1=rd, imm=lo12))
    return seq


class Assembler:
    """Sequential assembler with forward and backward labels.

    Branches and jumps record a label and are encoded once every label is known.
    """

    def __init__(self, base: int = 0):
        self.base = base
        self._items: List[Tuple[str, Dict[str, int], Optional[str]]] = []
        self.labels: Dict[str, int] = {}

    @property
    def address(self) -> int:
        return self.base + 4 * len(self._items)

    def label(self, name: str) -> "Assembler":
        if name in self.labels:
            raise ConfigurationError(f"duplicate label {name}", config_key=name)
        self.labels[name] = self.address
        return self

    def emit(self, mnemonic: str, **operands: int | str) -> "Assembler":
        values = {k: reg(v) if isinstance(v, str) else v for k, v in operands.items()}
        self._items.append((mnemonic, values, None))
        return self

    def extend(self, instructions: List[Instruction]) -> "Assembler":
        for instr in instructions:
            self._items.append((instr.mnemonic, instr.as_dict(), None))
        return self

    def li(self, rd: int | str, value: int) -> "Assembler":
        return self.extend(load_immediate(reg(rd), value))

    def branch(self, mnemonic: str, rs1: int | str, rs2: int | str, target: str) -> "Assembler":
        self._items.append((mnemonic, {"rs1": reg(rs1), "rs2": reg(rs2)}, target))
        return self

    def jump(self, target: str, rd: int | str = 0) -> "Assembler":
        self._items.append(("jal", {"rd": reg(rd)}, target))
        return self

    def assemble(self) -> List[Instruction]:
        program = []
        for index, (mnemonic, values, target) in enumerate(self._items):
            if target is not None:
                if target not in self.labels:
                    raise ConfigurationError(f"undefined label {target}", config_key=target)
                values = dict(values, imm=self.labels[target] - (self.base + 4 * index))
            program.append(asm(mnemonic, **values))
        return program
