"""The device under test: library-decoded RV64 core with a shadow model and fault hooks.

Each instruction is evaluated into an `Effect`, handed to the injected bug hooks, and
only then committed. The shadow model and coverage instrumentation observe every step.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import structlog

from ..coverage import CoverageMap, Instrumentation, PointKey
from ..isa import Instruction, UnknownWord, decode
from ..isa.csrs import CSR_NAMES, FCSR, FFLAGS, FRM, READ_ONLY_CSRS, csr_name
from ..models import HarnessConfig
from . import dut_fp
from .bugs import BugContext, BugSpec, get_bug
from .memory import MemoryImage
from .records import Retired, StepRecord
from .shadow import Retirement, ShadowModel
from .state import MASK64, ArchState, sext
from .traps import (
    BREAKPOINT,
    ECALL_M,
    ILLEGAL_INSTRUCTION,
    LOAD_MISALIGNED,
    REASON_CSR,
    REASON_DISABLED,
    REASON_UNKNOWN,
    STORE_MISALIGNED,
    ArchTrap,
    check_rounding_mode,
)

logger = structlog.get_logger(__name__)

ALL_CATEGORIES = ("I", "M", "F", "A", "ZiCsr")
BOX = 0xFFFFFFFF00000000
FP_CSRS = frozenset({FFLAGS, FRM, FCSR})
FLAG_CLASSES = frozenset({"fp_arith", "fp_cvt", "fp_cmp", "fp_minmax"})


@dataclass(frozen=True)
class Effect:
    """Architectural effect of one instruction, not yet committed.

    ``rd`` is (register file, index, value) with file ``x`` or ``f``; ``fflags`` are
    flags to accrue (None for instructions that do not touch them).
    """

    next_pc: int
    rd: Optional[Tuple[str, int, int]] = None
    fflags: Optional[int] = None
    csr: Optional[Tuple[int, int]] = None
    store: Optional[Tuple[int, int, int]] = None
    reserve: Optional[int] = None
    release: bool = False


def _signed(value: int) -> int:
    return sext(value, 64)


def _unbox(value: int) -> int:
    return value & 0xFFFFFFFF if value & BOX == BOX else dut_fp.CANONICAL_NAN


_ALU: Dict[str, Callable[[int, int], int]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "sll": lambda a, b: a << (b & 63),
    "slt": lambda a, b: int(_signed(a) < _signed(b)),
    "sltu": lambda a, b: int(a < b),
    "xor": lambda a, b: a ^ b,
    "srl": lambda a, b: a >> (b & 63),
    "sra": lambda a, b: _signed(a) >> (b & 63),
    "or": lambda a, b: a | b,
    "and": lambda a, b: a & b,
}
_ALU_IMM = {
    "addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or",
    "andi": "and", "slli": "sll", "srli": "srl", "srai": "sra",
}  # fmt: skip
_ALU_WORD: Dict[str, Callable[[int, int], int]] = {
    "addw": lambda a, b: a + b,
    "subw": lambda a, b: a - b,
    "sllw": lambda a, b: (a & 0xFFFFFFFF) << (b & 31),
    "srlw": lambda a, b: (a & 0xFFFFFFFF) >> (b & 31),
    "sraw": lambda a, b: sext(a, 32) >> (b & 31),
}
_ALU_WORD_IMM = {"addiw": "addw", "slliw": "sllw", "srliw": "srlw", "sraiw": "sraw"}

_BRANCH: Dict[str, Callable[[int, int], bool]] = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: _signed(a) < _signed(b),
    "bge": lambda a, b: _signed(a) >= _signed(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}

_SIGNED_LOADS = frozenset({"lb", "lh", "lw", "ld"})


def _div(a: int, b: int, bits: int, signed: bool, remainder: bool) -> int:
    """RISC-V division semantics on ``bits``-wide operands; result is the raw quotient."""
    mask = (1 << bits) - 1
    a, b = a & mask, b & mask
    if signed:
        a, b = sext(a, bits), sext(b, bits)
    if b == 0:
        return a if remainder else -1
    if signed and a == -(1 << (bits - 1)) and b == -1:
        return 0 if remainder else a
    quotient = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        quotient = -quotient
    return a - quotient * b if remainder else quotient


class DutCore:
    """Instrumented device-under-test interpreter."""

    def __init__(
        self,
        memory: MemoryImage,
        config: Optional[HarnessConfig] = None,
        instrumentation: Optional[Instrumentation] = None,
        covmap: Optional[CoverageMap] = None,
        bugs: Iterable["BugSpec | str"] = (),
    ):
        config = config or HarnessConfig()
        self.memory = memory
        self.disabled = frozenset(config.disabled_extensions)
        enabled = [c for c in ALL_CATEGORIES if c not in self.disabled]
        self.state = ArchState.reset(memory.code_base, enabled)
        self.reservation: Optional[int] = None
        self.bugs: List[BugSpec] = [get_bug(b) if isinstance(b, str) else b for b in bugs]
        self.shadow = ShadowModel(memory.data_base, memory.data_end)
        self.instrumentation = instrumentation
        self.covmap = covmap
        if instrumentation is not None and covmap is None:
            self.covmap = instrumentation.new_map()
        self.new_points: List[PointKey] = []
        self._before: Optional[ArchState] = None
        self._current: Optional[Instruction] = None
        self._handlers: Dict[str, Callable[[Instruction, int, bool], Effect]] = {
            "alu": self._alu,
            "alu_imm": self._alu,
            "upper": self._upper,
            "branch": self._branch,
            "jump": self._jump,
            "jump_reg": self._jump,
            "load": self._load,
            "store": self._store,
            "fence": self._fence,
            "system": self._system,
            "muldiv": self._muldiv,
            "amo": self._amo,
            "lr": self._lr,
            "sc": self._sc,
            "csr": self._csr,
            "fp_load": self._fp_load,
            "fp_store": self._fp_store,
            "fp_arith": self._fp_arith,
            "fp_sign": self._fp_sign,
            "fp_minmax": self._fp_minmax,
            "fp_cmp": self._fp_cmp,
            "fp_cvt": self._fp_cvt,
            "fp_move": self._fp_move,
        }

    # Lockstep driver interface

    def begin_step(self) -> None:
        self._before = self.state.copy()
        self._current = None

    def execute(self, pc: int, word: int, realign: bool = False) -> Retired:
        """Evaluate, perturb and commit the instruction ``word`` at ``pc``.

        Raises:
            ArchTrap: When the instruction traps; nothing is committed then
        """
        decoded = decode(word)
        if isinstance(decoded, UnknownWord):
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._current = decoded
        if decoded.template.category.value in self.disabled:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_DISABLED, word)
        effect = self._handlers[decoded.template.iclass](decoded, pc, realign)
        effect = self._perturb(decoded, effect)
        return self._commit(decoded, effect)

    def after_trap(self, trap: ArchTrap) -> None:
        if self._current is None:
            return
        ctx = BugContext(self._current, self.state, trap=trap)
        for bug in self._bugs_at("trap", self._current.mnemonic):
            bug.hook(ctx, self.state)

    def end_step(self, record: StepRecord) -> None:
        before = self._before if self._before is not None else self.state
        registers = self.shadow.step(
            Retirement(self._current, record.pc, record.next_pc, record.trap, before, self.state)
        )
        if self.instrumentation is not None and self.covmap is not None:
            self.new_points.extend(self.instrumentation.observe(registers, self.covmap))

    # Hooks

    def _bugs_at(self, stage: str, mnemonic: str) -> List[BugSpec]:
        return [b for b in self.bugs if b.stage == stage and b.applies_to(mnemonic)]

    def _fp_sources(self, instr: Instruction) -> Tuple[int, ...]:
        template = instr.template
        return tuple(
            _unbox(self.state.f[instr.operand(name)])
            for name in ("rs1", "rs2", "rs3")
            if template.has_slot(name) and template.slot(name).fp
        )

    def _perturb(self, instr: Instruction, effect: Effect) -> Effect:
        bugs = self._bugs_at("effect", instr.mnemonic)
        if not bugs:
            return effect
        ctx = BugContext(instr, self.state, self._fp_sources(instr))
        for bug in bugs:
            effect = bug.hook(ctx, effect)
        return effect

    def _rounding_mode(self, instr: Instruction) -> int:
        trap: Optional[ArchTrap] = None
        try:
            rm: Optional[int] = check_rounding_mode(instr.operand("rm"), self.state.frm)
        except ArchTrap as raised:
            rm, trap = None, raised
        bugs = self._bugs_at("rounding", instr.mnemonic)
        if bugs:
            ctx = BugContext(instr, self.state, self._fp_sources(instr))
            for bug in bugs:
                rm = bug.hook(ctx, rm)
        if rm is None:
            raise trap if trap is not None else ArchTrap(ILLEGAL_INSTRUCTION)
        return rm

    # Commit

    def _commit(self, instr: Instruction, effect: Effect) -> Retired:
        state = self.state
        if effect.store is not None:
            self.memory.store(*effect.store)
        if effect.release:
            self.reservation = None
        if effect.reserve is not None:
            self.reservation = effect.reserve

        rd = None
        if effect.rd is not None:
            kind, index, value = effect.rd
            if kind == "f":
                state.f[index] = value & MASK64
                rd = (f"f{index}", state.f[index])
            elif index:
                state.set_x(index, value)
                rd = (f"x{index}", state.x[index])

        csrs: Dict[str, int] = {}
        if effect.csr is not None:
            address, value = effect.csr
            self._write_csr(address, value)
            csrs[csr_name(address)] = self._read_csr(address)
        if effect.fflags is not None:
            state.accrue(effect.fflags)
        if instr.template.iclass in FLAG_CLASSES:
            csrs["fflags"] = state.fflags
        return Retired(effect.next_pc, rd, csrs)

    # CSR access

    def _read_csr(self, address: int) -> int:
        if address == FFLAGS:
            return self.state.fflags
        if address == FRM:
            return self.state.frm
        if address == FCSR:
            return self.state.fcsr & 0xFF
        return self.state.csrs[address]

    def _write_csr(self, address: int, value: int) -> None:
        csrs = self.state.csrs
        if address in READ_ONLY_CSRS:
            return
        if address == FFLAGS:
            csrs[FCSR] = (csrs[FCSR] & ~0x1F) | (value & 0x1F)
        elif address == FRM:
            self.state.set_frm(value)
        elif address == FCSR:
            csrs[FCSR] = value & 0xFF
        else:
            csrs[address] = value & MASK64

    # Integer instructions

    def _alu(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        name = instr.mnemonic
        a = self.state.x[instr.operand("rs1")]
        if instr.template.has_slot("rs2"):
            b = self.state.x[instr.operand("rs2")]
        elif instr.template.has_slot("imm"):
            b = instr.operand("imm") & MASK64
        else:
            b = instr.operand("shamt") if instr.template.has_slot("shamt") else instr.operand("shamt5")
        name = _ALU_IMM.get(name, _ALU_WORD_IMM.get(name, name))
        if name in _ALU_WORD:
            value = sext(_ALU_WORD[name](a, b), 32)
        else:
            value = _ALU[name](a, b)
        return Effect(pc + 4, rd=("x", instr.operand("rd"), value & MASK64))

    def _upper(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        offset = sext(instr.operand("imm") << 12, 32)
        base = pc if instr.mnemonic == "auipc" else 0
        return Effect(pc + 4, rd=("x", instr.operand("rd"), (base + offset) & MASK64))

    def _branch(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        a = self.state.x[instr.operand("rs1")]
        b = self.state.x[instr.operand("rs2")]
        taken = _BRANCH[instr.mnemonic](a, b)
        return Effect((pc + instr.operand("imm")) & MASK64 if taken else pc + 4)

    def _jump(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        if instr.mnemonic == "jal":
            target = pc + instr.operand("imm")
        else:
            target = (self.state.x[instr.operand("rs1")] + instr.operand("imm")) & ~1
        return Effect(target & MASK64, rd=("x", instr.operand("rd"), pc + 4))

    def _address(self, instr: Instruction, width: int, realign: bool, cause: int) -> int:
        offset = instr.operand("imm") if instr.template.has_slot("imm") else 0
        address = (self.state.x[instr.operand("rs1")] + offset) & MASK64
        if address % width:
            if not realign:
                raise ArchTrap(cause, tval=address)
            address -= address % width
        return address

    def _load(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        width = instr.template.mem_width
        address = self._address(instr, width, realign, LOAD_MISALIGNED)
        value = self.memory.load(address, width)
        if instr.mnemonic in _SIGNED_LOADS:
            value = sext(value, 8 * width)
        return Effect(pc + 4, rd=("x", instr.operand("rd"), value & MASK64))

    def _store(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        width = instr.template.mem_width
        address = self._address(instr, width, realign, STORE_MISALIGNED)
        self.memory.check_store(address, width)
        value = self.state.x[instr.operand("rs2")]
        return Effect(pc + 4, store=(address, width, value))

    def _fence(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        return Effect(pc + 4)

    def _system(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        raise ArchTrap(BREAKPOINT if instr.mnemonic == "ebreak" else ECALL_M, tval=pc)

    def _muldiv(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        name = instr.mnemonic
        a = self.state.x[instr.operand("rs1")]
        b = self.state.x[instr.operand("rs2")]
        if name == "mul":
            value = a * b
        elif name == "mulh":
            value = (_signed(a) * _signed(b)) >> 64
        elif name == "mulhsu":
            value = (_signed(a) * b) >> 64
        elif name == "mulhu":
            value = (a * b) >> 64
        elif name == "mulw":
            value = sext(a * b, 32)
        else:
            word = name.endswith("w")
            bits = 32 if word else 64
            stem = name[:-1] if word else name
            value = _div(a, b, bits, not stem.endswith("u"), stem.startswith("rem"))
            if word:
                value = sext(value, 32)
        return Effect(pc + 4, rd=("x", instr.operand("rd"), value & MASK64))

    # Atomics

    def _amo(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        width = instr.template.mem_width
        bits = 8 * width
        address = self._address(instr, width, realign, STORE_MISALIGNED)
        old = sext(self.memory.load(address, width), bits)
        self.memory.check_store(address, width)
        operand = sext(self.state.x[instr.operand("rs2")], bits)
        op = instr.mnemonic.split(".")[0][3:]
        mask = (1 << bits) - 1
        if op == "swap":
            new = operand
        elif op == "add":
            new = old + operand
        elif op == "xor":
            new = old ^ operand
        elif op == "and":
            new = old & operand
        elif op == "or":
            new = old | operand
        elif op == "min":
            new = min(old, operand)
        elif op == "max":
            new = max(old, operand)
        elif op == "minu":
            new = min(old & mask, operand & mask)
        else:
            new = max(old & mask, operand & mask)
        return Effect(
            pc + 4,
            rd=("x", instr.operand("rd"), old & MASK64),
            store=(address, width, new & mask),
        )

    def _lr(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        width = instr.template.mem_width
        address = self._address(instr, width, realign, LOAD_MISALIGNED)
        value = sext(self.memory.load(address, width), 8 * width)
        return Effect(pc + 4, rd=("x", instr.operand("rd"), value & MASK64), reserve=address)

    def _sc(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        width = instr.template.mem_width
        address = self._address(instr, width, realign, STORE_MISALIGNED)
        self.memory.check_store(address, width)
        rd = instr.operand("rd")
        if self.reservation != address:
            return Effect(pc + 4, rd=("x", rd, 1), release=True)
        value = self.state.x[instr.operand("rs2")]
        return Effect(pc + 4, rd=("x", rd, 0), store=(address, width, value), release=True)

    # CSR instructions

    def _csr(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        address = instr.operand("csr")
        if address not in CSR_NAMES:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_CSR, address)
        if address in FP_CSRS and "F" in self.disabled:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_DISABLED, address)
        immediate = instr.mnemonic.endswith("i")
        source_index = instr.operand("uimm") if immediate else instr.operand("rs1")
        source = source_index if immediate else self.state.x[source_index]
        old = self._read_csr(address)
        op = instr.mnemonic[4]
        if op == "w":
            new: Optional[int] = source
        elif source_index == 0:
            new = None
        elif op == "s":
            new = old | source
        else:
            new = old & ~source
        return Effect(
            pc + 4,
            rd=("x", instr.operand("rd"), old),
            csr=None if new is None else (address, new),
        )

    # Floating point

    def _fp_load(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        address = self._address(instr, 4, realign, LOAD_MISALIGNED)
        value = self.memory.load(address, 4)
        return Effect(pc + 4, rd=("f", instr.operand("rd"), BOX | value))

    def _fp_store(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        address = self._address(instr, 4, realign, STORE_MISALIGNED)
        self.memory.check_store(address, 4)
        value = self.state.f[instr.operand("rs2")] & 0xFFFFFFFF
        return Effect(pc + 4, store=(address, 4, value))

    def _fp_arith(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        rm = self._rounding_mode(instr)
        sources: Sequence[int] = self._fp_sources(instr)
        name = instr.mnemonic
        if name == "fadd.s":
            bits, flags = dut_fp.fadd(sources[0], sources[1], rm)
        elif name == "fsub.s":
            bits, flags = dut_fp.fsub(sources[0], sources[1], rm)
        elif name == "fmul.s":
            bits, flags = dut_fp.fmul(sources[0], sources[1], rm)
        elif name == "fdiv.s":
            bits, flags = dut_fp.fdiv(sources[0], sources[1], rm)
        elif name == "fsqrt.s":
            bits, flags = dut_fp.fsqrt(sources[0], rm)
        else:
            negate_product = name.startswith("fn")
            negate_addend = name in ("fmsub.s", "fnmadd.s")
            bits, flags = dut_fp.fma(*sources, rm, negate_product, negate_addend)
        return Effect(pc + 4, rd=("f", instr.operand("rd"), BOX | bits), fflags=flags)

    def _fp_sign(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        a, b = self._fp_sources(instr)
        magnitude = a & 0x7FFFFFFF
        if instr.mnemonic == "fsgnj.s":
            bits = magnitude | (b & dut_fp.SIGN)
        elif instr.mnemonic == "fsgnjn.s":
            bits = magnitude | (~b & dut_fp.SIGN)
        else:
            bits = a ^ (b & dut_fp.SIGN)
        return Effect(pc + 4, rd=("f", instr.operand("rd"), BOX | bits))

    def _fp_minmax(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        a, b = self._fp_sources(instr)
        bits, flags = dut_fp.fminmax(a, b, instr.mnemonic == "fmax.s")
        return Effect(pc + 4, rd=("f", instr.operand("rd"), BOX | bits), fflags=flags)

    def _fp_cmp(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        a, b = self._fp_sources(instr)
        value, flags = dut_fp.fcompare(a, b, instr.mnemonic[1:3])
        return Effect(pc + 4, rd=("x", instr.operand("rd"), value), fflags=flags)

    def _fp_cvt(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        rm = self._rounding_mode(instr)
        if instr.mnemonic == "fcvt.w.s":
            (a,) = self._fp_sources(instr)
            value, flags = dut_fp.fcvt_w_s(a, rm)
            return Effect(pc + 4, rd=("x", instr.operand("rd"), value), fflags=flags)
        bits, flags = dut_fp.fcvt_s_w(self.state.x[instr.operand("rs1")], rm)
        return Effect(pc + 4, rd=("f", instr.operand("rd"), BOX | bits), fflags=flags)

    def _fp_move(self, instr: Instruction, pc: int, realign: bool) -> Effect:
        rd = instr.operand("rd")
        if instr.mnemonic == "fmv.w.x":
            value = self.state.x[instr.operand("rs1")] & 0xFFFFFFFF
            return Effect(pc + 4, rd=("f", rd, BOX | value))
        if instr.mnemonic == "fmv.x.w":
            raw = self.state.f[instr.operand("rs1")] & 0xFFFFFFFF
            return Effect(pc + 4, rd=("x", rd, sext(raw, 32) & MASK64))
        (a,) = self._fp_sources(instr)
        return Effect(pc + 4, rd=("x", rd, dut_fp.fclass(a)))
