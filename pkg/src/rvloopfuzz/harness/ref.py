"""Reference RV64IMAF_Zicsr interpreter.

Decodes words with its own opcode and funct tables and mutates state directly. It
shares no decode or arithmetic code with the DUT and never carries fault hooks.
"""

from typing import Callable, Dict, Optional

from ..isa.csrs import CSR_NAMES, FCSR, FFLAGS, FRM, MISA, MINSTRET, csr_name
from ..models import HarnessConfig
from . import ref_fp
from .memory import MemoryImage
from .records import Retired
from .state import MASK64, ArchState, sext
from .traps import (
    BREAKPOINT,
    ECALL_M,
    ILLEGAL_INSTRUCTION,
    LOAD_MISALIGNED,
    REASON_CSR,
    REASON_DISABLED,
    REASON_FRM,
    REASON_RM,
    REASON_UNKNOWN,
    STORE_MISALIGNED,
    ArchTrap,
)

MASK32 = 0xFFFFFFFF
NAN_BOX = 0xFFFFFFFF00000000

OP_LOAD, OP_LOAD_FP, OP_MISC_MEM, OP_IMM, OP_AUIPC, OP_IMM_32 = 0x03, 0x07, 0x0F, 0x13, 0x17, 0x1B
OP_STORE, OP_STORE_FP, OP_AMO, OP_REG, OP_LUI, OP_REG_32 = 0x23, 0x27, 0x2F, 0x33, 0x37, 0x3B
OP_MADD, OP_MSUB, OP_NMSUB, OP_NMADD, OP_FP = 0x43, 0x47, 0x4B, 0x4F, 0x53
OP_BRANCH, OP_JALR, OP_JAL, OP_SYSTEM = 0x63, 0x67, 0x6F, 0x73

# funct3 -> (width, sign-extend)
LOAD_WIDTHS = {0: (1, True), 1: (2, True), 2: (4, True), 3: (8, True), 4: (1, False), 5: (2, False), 6: (4, False)}
STORE_WIDTHS = {0: 1, 1: 2, 2: 4, 3: 8}

# funct5 of AMO words
AMO_LR, AMO_SC = 0x02, 0x03
AMO_OPS: Dict[int, Callable[[int, int, int], int]] = {
    0x01: lambda old, src, bits: src,
    0x00: lambda old, src, bits: old + src,
    0x04: lambda old, src, bits: old ^ src,
    0x0C: lambda old, src, bits: old & src,
    0x08: lambda old, src, bits: old | src,
    0x10: lambda old, src, bits: min(sext(old, bits), sext(src, bits)),
    0x14: lambda old, src, bits: max(sext(old, bits), sext(src, bits)),
    0x18: lambda old, src, bits: min(old, src),
    0x1C: lambda old, src, bits: max(old, src),
}

FP_ROUNDED = {0x00, 0x04, 0x08, 0x0C, 0x2C, 0x60, 0x68}
FMA_OPCODES = {OP_MADD: (False, False), OP_MSUB: (False, True), OP_NMSUB: (True, False), OP_NMADD: (True, True)}


def _to_signed(value: int) -> int:
    return sext(value, 64)


def _unboxed(value: int) -> int:
    if value >> 32 == MASK32:
        return value & MASK32
    return ref_fp.QNAN


def _quotient(dividend: int, divisor: int) -> int:
    """Truncating division on Python integers."""
    q = abs(dividend) // abs(divisor)
    return -q if (dividend < 0) ^ (divisor < 0) else q


class RefCore:
    """Golden-model interpreter; the DUT is checked against it step by step."""

    def __init__(self, memory: MemoryImage, config: Optional[HarnessConfig] = None):
        config = config or HarnessConfig()
        self.memory = memory
        self.disabled = frozenset(config.disabled_extensions)
        enabled = [c for c in ("I", "M", "F", "A", "ZiCsr") if c not in self.disabled]
        self.state = ArchState.reset(memory.code_base, enabled)
        self.reservation: Optional[int] = None
        self._rd: Optional[tuple] = None
        self._csrs: Dict[str, int] = {}
        self._dispatch: Dict[int, Callable[[int, int, bool], int]] = {
            OP_LUI: self._lui,
            OP_AUIPC: self._auipc,
            OP_JAL: self._jal,
            OP_JALR: self._jalr,
            OP_BRANCH: self._branch,
            OP_LOAD: self._load,
            OP_STORE: self._store,
            OP_IMM: self._op_imm,
            OP_IMM_32: self._op_imm_32,
            OP_REG: self._op,
            OP_REG_32: self._op_32,
            OP_MISC_MEM: self._fence,
            OP_SYSTEM: self._system,
            OP_AMO: self._amo,
            OP_LOAD_FP: self._flw,
            OP_STORE_FP: self._fsw,
            OP_FP: self._op_fp,
            OP_MADD: self._fma,
            OP_MSUB: self._fma,
            OP_NMSUB: self._fma,
            OP_NMADD: self._fma,
        }

    # Lockstep driver interface

    def begin_step(self) -> None:
        self._rd = None
        self._csrs = {}

    def execute(self, pc: int, word: int, realign: bool = False) -> Retired:
        """Execute ``word`` at ``pc``; raises `ArchTrap` before touching state."""
        handler = self._dispatch.get(word & 0x7F)
        if handler is None or word & 0x3 != 0x3:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        next_pc = handler(pc, word, realign)
        return Retired(next_pc & MASK64, self._rd, dict(self._csrs))

    def after_trap(self, trap: ArchTrap) -> None:
        pass

    def end_step(self, record: object) -> None:
        pass

    # Helpers

    def _require(self, extension: str, word: int) -> None:
        if extension in self.disabled:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_DISABLED, word)

    def _write_x(self, index: int, value: int) -> None:
        if index:
            self.state.x[index] = value & MASK64
            self._rd = (f"x{index}", self.state.x[index])

    def _write_f(self, index: int, bits: int) -> None:
        self.state.f[index] = NAN_BOX | (bits & MASK32)
        self._rd = (f"f{index}", self.state.f[index])

    def _set_flags(self, flags: int) -> None:
        self.state.csrs[FCSR] |= flags & 0x1F
        self._csrs["fflags"] = self.state.csrs[FCSR] & 0x1F

    def _effective_address(self, word: int, offset: int, width: int, realign: bool, cause: int) -> int:
        address = (self.state.x[(word >> 15) & 0x1F] + offset) & MASK64
        misaligned = address & (width - 1)
        if misaligned and not realign:
            raise ArchTrap(cause, tval=address)
        return address - misaligned

    def _rounding(self, word: int) -> int:
        rm = (word >> 12) & 0x7
        if rm == 7:
            frm = (self.state.csrs[FCSR] >> 5) & 0x7
            if frm > 4:
                raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_FRM, word)
            return frm
        if rm > 4:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_RM, word)
        return rm

    def _freg(self, index: int) -> int:
        return _unboxed(self.state.f[index])

    # RV64I

    def _lui(self, pc: int, word: int, realign: bool) -> int:
        self._write_x((word >> 7) & 0x1F, sext(word & 0xFFFFF000, 32))
        return pc + 4

    def _auipc(self, pc: int, word: int, realign: bool) -> int:
        self._write_x((word >> 7) & 0x1F, pc + sext(word & 0xFFFFF000, 32))
        return pc + 4

    def _jal(self, pc: int, word: int, realign: bool) -> int:
        offset = (
            ((word >> 31) & 0x1) << 20
            | ((word >> 12) & 0xFF) << 12
            | ((word >> 20) & 0x1) << 11
            | ((word >> 21) & 0x3FF) << 1
        )
        self._write_x((word >> 7) & 0x1F, pc + 4)
        return pc + sext(offset, 21)

    def _jalr(self, pc: int, word: int, realign: bool) -> int:
        if (word >> 12) & 0x7:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        target = (self.state.x[(word >> 15) & 0x1F] + sext(word >> 20, 12)) & ~1
        self._write_x((word >> 7) & 0x1F, pc + 4)
        return target

    def _branch(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        if funct3 in (2, 3):
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        a = self.state.x[(word >> 15) & 0x1F]
        b = self.state.x[(word >> 20) & 0x1F]
        if funct3 < 2:
            taken = (a == b) ^ bool(funct3 & 1)
        elif funct3 < 6:
            taken = (_to_signed(a) < _to_signed(b)) ^ bool(funct3 & 1)
        else:
            taken = (a < b) ^ bool(funct3 & 1)
        if not taken:
            return pc + 4
        offset = (
            ((word >> 31) & 0x1) << 12
            | ((word >> 7) & 0x1) << 11
            | ((word >> 25) & 0x3F) << 5
            | ((word >> 8) & 0xF) << 1
        )
        return pc + sext(offset, 13)

    def _load(self, pc: int, word: int, realign: bool) -> int:
        spec = LOAD_WIDTHS.get((word >> 12) & 0x7)
        if spec is None:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        width, signed = spec
        address = self._effective_address(word, sext(word >> 20, 12), width, realign, LOAD_MISALIGNED)
        value = self.memory.load(address, width)
        self._write_x((word >> 7) & 0x1F, sext(value, 8 * width) if signed else value)
        return pc + 4

    def _store(self, pc: int, word: int, realign: bool) -> int:
        width = STORE_WIDTHS.get((word >> 12) & 0x7)
        if width is None:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        offset = sext(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12)
        address = self._effective_address(word, offset, width, realign, STORE_MISALIGNED)
        self.memory.store(address, width, self.state.x[(word >> 20) & 0x1F])
        return pc + 4

    def _op_imm(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        a = self.state.x[(word >> 15) & 0x1F]
        imm = sext(word >> 20, 12)
        shamt = (word >> 20) & 0x3F
        funct6 = word >> 26
        if funct3 == 0:
            value = a + imm
        elif funct3 == 2:
            value = int(_to_signed(a) < imm)
        elif funct3 == 3:
            value = int(a < (imm & MASK64))
        elif funct3 == 4:
            value = a ^ imm
        elif funct3 == 6:
            value = a | imm
        elif funct3 == 7:
            value = a & imm
        elif funct3 == 1 and funct6 == 0:
            value = a << shamt
        elif funct3 == 5 and funct6 == 0:
            value = a >> shamt
        elif funct3 == 5 and funct6 == 0x10:
            value = _to_signed(a) >> shamt
        else:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._write_x((word >> 7) & 0x1F, value)
        return pc + 4

    def _op_imm_32(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        funct7 = word >> 25
        a = self.state.x[(word >> 15) & 0x1F] & MASK32
        shamt = (word >> 20) & 0x1F
        if funct3 == 0:
            value = a + sext(word >> 20, 12)
        elif funct3 == 1 and funct7 == 0:
            value = a << shamt
        elif funct3 == 5 and funct7 == 0:
            value = a >> shamt
        elif funct3 == 5 and funct7 == 0x20:
            value = sext(a, 32) >> shamt
        else:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._write_x((word >> 7) & 0x1F, sext(value & MASK32, 32))
        return pc + 4

    def _op(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        funct7 = word >> 25
        a = self.state.x[(word >> 15) & 0x1F]
        b = self.state.x[(word >> 20) & 0x1F]
        if funct7 == 0x01:
            self._require("M", word)
            value = self._muldiv(funct3, a, b)
        elif funct7 == 0x20 and funct3 == 0:
            value = a - b
        elif funct7 == 0x20 and funct3 == 5:
            value = _to_signed(a) >> (b & 0x3F)
        elif funct7 == 0:
            value = (
                a + b,
                a << (b & 0x3F),
                int(_to_signed(a) < _to_signed(b)),
                int(a < b),
                a ^ b,
                a >> (b & 0x3F),
                a | b,
                a & b,
            )[funct3]
        else:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._write_x((word >> 7) & 0x1F, value)
        return pc + 4

    def _op_32(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        funct7 = word >> 25
        a = self.state.x[(word >> 15) & 0x1F] & MASK32
        b = self.state.x[(word >> 20) & 0x1F] & MASK32
        if funct7 == 0x01 and funct3 in (0, 4, 5, 6, 7):
            self._require("M", word)
            value = self._muldiv_32(funct3, a, b)
        elif funct7 == 0 and funct3 == 0:
            value = a + b
        elif funct7 == 0x20 and funct3 == 0:
            value = a - b
        elif funct7 == 0 and funct3 == 1:
            value = a << (b & 0x1F)
        elif funct7 == 0 and funct3 == 5:
            value = a >> (b & 0x1F)
        elif funct7 == 0x20 and funct3 == 5:
            value = sext(a, 32) >> (b & 0x1F)
        else:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._write_x((word >> 7) & 0x1F, sext(value & MASK32, 32))
        return pc + 4

    def _fence(self, pc: int, word: int, realign: bool) -> int:
        if word != 0x0FF0000F:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        return pc + 4

    # M

    @staticmethod
    def _muldiv(funct3: int, a: int, b: int) -> int:
        sa, sb = _to_signed(a), _to_signed(b)
        if funct3 == 0:
            return a * b
        if funct3 == 1:
            return (sa * sb) >> 64
        if funct3 == 2:
            return (sa * b) >> 64
        if funct3 == 3:
            return (a * b) >> 64
        if funct3 == 4:
            if b == 0:
                return MASK64
            if sa == -(1 << 63) and sb == -1:
                return a
            return _quotient(sa, sb)
        if funct3 == 5:
            return MASK64 if b == 0 else a // b
        if funct3 == 6:
            if b == 0:
                return a
            if sa == -(1 << 63) and sb == -1:
                return 0
            return sa - _quotient(sa, sb) * sb
        return a if b == 0 else a % b

    @staticmethod
    def _muldiv_32(funct3: int, a: int, b: int) -> int:
        sa, sb = sext(a, 32), sext(b, 32)
        if funct3 == 0:
            return a * b
        if funct3 == 4:
            if b == 0:
                return MASK32
            if sa == -(1 << 31) and sb == -1:
                return a
            return _quotient(sa, sb)
        if funct3 == 5:
            return MASK32 if b == 0 else a // b
        if funct3 == 6:
            if b == 0:
                return a
            if sa == -(1 << 31) and sb == -1:
                return 0
            return sa - _quotient(sa, sb) * sb
        return a if b == 0 else a % b

    # A

    def _amo(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        funct5 = word >> 27
        aq_rl = (word >> 25) & 0x3
        rs2 = (word >> 20) & 0x1F
        if funct3 not in (2, 3) or aq_rl:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        if funct5 not in AMO_OPS and funct5 not in (AMO_LR, AMO_SC):
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        if funct5 == AMO_LR and rs2:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("A", word)
        width = 4 if funct3 == 2 else 8
        bits = 8 * width
        mask = (1 << bits) - 1
        rd = (word >> 7) & 0x1F

        if funct5 == AMO_LR:
            address = self._effective_address(word, 0, width, realign, LOAD_MISALIGNED)
            value = self.memory.load(address, width)
            self.reservation = address
            self._write_x(rd, sext(value, bits))
            return pc + 4

        address = self._effective_address(word, 0, width, realign, STORE_MISALIGNED)
        if funct5 == AMO_SC:
            self.memory.check_store(address, width)
            succeeded = self.reservation == address
            self.reservation = None
            if succeeded:
                self.memory.store(address, width, self.state.x[rs2])
            self._write_x(rd, 0 if succeeded else 1)
            return pc + 4

        old = self.memory.load(address, width)
        self.memory.check_store(address, width)
        new = AMO_OPS[funct5](old, self.state.x[rs2] & mask, bits)
        self.memory.store(address, width, new & mask)
        self._write_x(rd, sext(old, bits))
        return pc + 4

    # Zicsr and system

    def _system(self, pc: int, word: int, realign: bool) -> int:
        funct3 = (word >> 12) & 0x7
        if funct3 == 0:
            if word == 0x00000073:
                raise ArchTrap(ECALL_M, tval=pc)
            if word == 0x00100073:
                raise ArchTrap(BREAKPOINT, tval=pc)
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        if funct3 == 4:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("ZiCsr", word)
        address = word >> 20
        if address not in CSR_NAMES:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_CSR, address)
        if address in (FFLAGS, FRM, FCSR) and "F" in self.disabled:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_DISABLED, address)

        field = (word >> 15) & 0x1F
        source = field if funct3 & 0x4 else self.state.x[field]
        old = self._csr_read(address)
        kind = funct3 & 0x3
        writes = kind == 1 or field != 0
        if writes:
            if kind == 1:
                new = source
            elif kind == 2:
                new = old | source
            else:
                new = old & ~source
            self._csr_write(address, new)
            self._csrs[csr_name(address)] = self._csr_read(address)
        self._write_x((word >> 7) & 0x1F, old)
        return pc + 4

    def _csr_read(self, address: int) -> int:
        fcsr = self.state.csrs[FCSR]
        if address == FFLAGS:
            return fcsr & 0x1F
        if address == FRM:
            return (fcsr >> 5) & 0x7
        if address == FCSR:
            return fcsr & 0xFF
        return self.state.csrs[address]

    def _csr_write(self, address: int, value: int) -> None:
        csrs = self.state.csrs
        if address in (MISA, MINSTRET):
            return
        if address == FFLAGS:
            csrs[FCSR] = (csrs[FCSR] & 0xE0) | (value & 0x1F)
        elif address == FRM:
            csrs[FCSR] = (csrs[FCSR] & 0x1F) | ((value & 0x7) << 5)
        elif address == FCSR:
            csrs[FCSR] = value & 0xFF
        else:
            csrs[address] = value & MASK64

    # F

    def _flw(self, pc: int, word: int, realign: bool) -> int:
        if (word >> 12) & 0x7 != 2:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("F", word)
        address = self._effective_address(word, sext(word >> 20, 12), 4, realign, LOAD_MISALIGNED)
        self._write_f((word >> 7) & 0x1F, self.memory.load(address, 4))
        return pc + 4

    def _fsw(self, pc: int, word: int, realign: bool) -> int:
        if (word >> 12) & 0x7 != 2:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("F", word)
        offset = sext(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12)
        address = self._effective_address(word, offset, 4, realign, STORE_MISALIGNED)
        self.memory.store(address, 4, self.state.f[(word >> 20) & 0x1F] & MASK32)
        return pc + 4

    def _fma(self, pc: int, word: int, realign: bool) -> int:
        if (word >> 25) & 0x3:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("F", word)
        rm = self._rounding(word)
        negate_product, negate_addend = FMA_OPCODES[word & 0x7F]
        bits, flags = ref_fp.fused(
            self._freg((word >> 15) & 0x1F),
            self._freg((word >> 20) & 0x1F),
            self._freg(word >> 27),
            rm,
            negate_product,
            negate_addend,
        )
        self._write_f((word >> 7) & 0x1F, bits)
        self._set_flags(flags)
        return pc + 4

    def _op_fp(self, pc: int, word: int, realign: bool) -> int:
        funct7 = word >> 25
        funct3 = (word >> 12) & 0x7
        rs2 = (word >> 20) & 0x1F
        if not self._valid_fp(funct7, funct3, rs2):
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_UNKNOWN, word)
        self._require("F", word)
        rm = self._rounding(word) if funct7 in FP_ROUNDED else 0
        rd = (word >> 7) & 0x1F
        rs1 = (word >> 15) & 0x1F
        a, b = self._freg(rs1), self._freg(rs2)

        if funct7 in (0x00, 0x04):
            bits, flags = ref_fp.add(a, b, rm, subtract=funct7 == 0x04)
        elif funct7 == 0x08:
            bits, flags = ref_fp.mul(a, b, rm)
        elif funct7 == 0x0C:
            bits, flags = ref_fp.div(a, b, rm)
        elif funct7 == 0x2C:
            bits, flags = ref_fp.sqrt(a, rm)
        elif funct7 == 0x10:
            if funct3 == 2:
                self._write_f(rd, a ^ (b & ref_fp.SIGN_BIT))
            else:
                sign = (b if funct3 == 0 else ~b) & ref_fp.SIGN_BIT
                self._write_f(rd, (a & 0x7FFFFFFF) | sign)
            return pc + 4
        elif funct7 == 0x14:
            bits, flags = ref_fp.min_max(a, b, maximum=funct3 == 1)
        elif funct7 == 0x50:
            value, flags = ref_fp.compare(a, b, ("le", "lt", "eq")[funct3])
            self._write_x(rd, value)
            self._set_flags(flags)
            return pc + 4
        elif funct7 == 0x60:
            value, flags = ref_fp.to_int32(a, rm)
            self._write_x(rd, sext(value, 32))
            self._set_flags(flags)
            return pc + 4
        elif funct7 == 0x68:
            bits, flags = ref_fp.from_int32(self.state.x[rs1] & MASK32, rm)
        elif funct7 == 0x70:
            if funct3 == 0:
                self._write_x(rd, sext(self.state.f[rs1] & MASK32, 32))
            else:
                self._write_x(rd, ref_fp.classify(a))
            return pc + 4
        else:
            self._write_f(rd, self.state.x[rs1] & MASK32)
            return pc + 4
        self._write_f(rd, bits)
        self._set_flags(flags)
        return pc + 4

    @staticmethod
    def _valid_fp(funct7: int, funct3: int, rs2: int) -> bool:
        if funct7 in (0x00, 0x04, 0x08, 0x0C):
            return True
        if funct7 in (0x2C, 0x60, 0x68):
            return rs2 == 0
        if funct7 == 0x10:
            return funct3 <= 2
        if funct7 == 0x14:
            return funct3 <= 1
        if funct7 == 0x50:
            return funct3 <= 2
        if funct7 == 0x70:
            return rs2 == 0 and funct3 <= 1
        if funct7 == 0x78:
            return rs2 == 0 and funct3 == 0
        return False
