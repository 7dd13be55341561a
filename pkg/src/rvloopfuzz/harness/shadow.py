"""Shadow model: the DUT's control registers, driven once per step record.

Every register of the bundled core netlist has a value here. `next_shadow` is a pure
function of the previous registers and one `Retirement`; the coverage instrumentation
reads the result.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

from ..isa import Instruction
from ..isa.csrs import (
    FCSR,
    FFLAGS,
    FRM,
    MCAUSE,
    MEPC,
    MINSTRET,
    MISA,
    MSCRATCH,
    MTVEC,
    RM_DYN,
)
from .state import MASK64, ArchState

ICLASSES = (
    "alu", "alu_imm", "amo", "branch", "csr", "fence", "fp_arith", "fp_cmp", "fp_cvt",
    "fp_load", "fp_minmax", "fp_move", "fp_sign", "fp_store", "jump", "jump_reg", "load",
    "lr", "muldiv", "sc", "store", "system", "upper",
)  # fmt: skip
ICLASS_CODES = {name: code for code, name in enumerate(ICLASSES)}

ACCESS_KINDS = {"load": 1, "store": 2, "amo": 3, "lr": 4, "sc": 5, "fp_load": 6, "fp_store": 7}
ACCESS_SIZES = {1: 0, 2: 1, 4: 2, 8: 3}

FP_OPS = (
    "fadd.s", "fsub.s", "fmul.s", "fdiv.s", "fsqrt.s", "fmadd.s", "fmsub.s", "fnmsub.s",
    "fnmadd.s", "fsgnj.s", "fsgnjn.s", "fsgnjx.s", "fmin.s", "fmax.s", "feq.s", "flt.s",
    "fle.s", "fcvt.w.s", "fcvt.s.w", "fmv.x.w", "fclass.s", "fmv.w.x", "flw", "fsw",
)  # fmt: skip

CSR_CLASSES = {
    FFLAGS: 1, FRM: 2, FCSR: 3, MSCRATCH: 4, MTVEC: 4, MEPC: 5, MCAUSE: 5, MINSTRET: 6, MISA: 7,
}  # fmt: skip
CSR_OPS = {"csrrw": 1, "csrrwi": 1, "csrrs": 2, "csrrsi": 2, "csrrc": 3, "csrrci": 3}

SEQ_IDLE, SEQ_PRODUCED, SEQ_CONSUMED, SEQ_LOOPED = 0, 1, 2, 3

ShadowState = Dict[str, Dict[str, int]]


@dataclass(frozen=True)
class Retirement:
    """One step as the shadow model sees it."""

    instruction: Optional[Instruction]
    pc: int
    next_pc: int
    trap: Optional[int]
    before: ArchState
    after: ArchState

    @property
    def iclass(self) -> str:
        return self.instruction.template.iclass if self.instruction else "system"

    @property
    def taken(self) -> bool:
        return (
            self.trap is None
            and self.iclass in ("branch", "jump", "jump_reg")
            and self.next_pc != self.pc + 4
        )

    @property
    def backward(self) -> bool:
        return self.taken and self.next_pc <= self.pc

    def reads(self, register: int) -> bool:
        """Whether the instruction reads integer register ``register``."""
        if self.instruction is None:
            return False
        template = self.instruction.template
        for name in ("rs1", "rs2"):
            if template.has_slot(name) and not template.slot(name).fp:
                if self.instruction.operand(name) == register:
                    return True
        return False


def reset_shadow() -> ShadowState:
    return {
        "frontend": {"ex_class": 0, "mem_class": 0, "br_hist": 0, "redirect": 0, "fetch_pc": 0},
        "lsu": {
            "acc_type": 0, "acc_size": 0, "misalign": 0, "in_data": 0,
            "reserved": 0, "prev_type": 0, "addr_q": 0,
        },  # fmt: skip
        "fpu": {"op_q": 0, "rm_q": 0, "sticky": 0, "unboxed": 0, "mant_q": 0},
        "muldiv": {"md_op": 0, "md_special": 0, "md_run": 0},
        "csrfile": {"sel_q": 0, "op_q": 0, "frm_q": 0, "cause_q": 0, "trap_pend": 0},
        "seqdet": {"seq_state": 0, "seq_tag": 0},
        "core": {"priv": 3},
    }


def _frontend(prev: Mapping[str, int], step: Retirement) -> Dict[str, int]:
    hist = prev["br_hist"]
    if step.iclass in ("branch", "jump", "jump_reg"):
        hist = ((hist << 1) | int(step.taken)) & 0xF
    return {
        "ex_class": ICLASS_CODES[step.iclass],
        "mem_class": prev["ex_class"],
        "br_hist": hist,
        "redirect": int(step.backward),
        "fetch_pc": (step.pc >> 2) & 0xFFF,
    }


def _lsu(prev: Mapping[str, int], step: Retirement, data_base: int, data_end: int) -> Dict[str, int]:
    kind = ACCESS_KINDS.get(step.iclass)
    if kind is None or step.instruction is None:
        return dict(prev)
    template = step.instruction.template
    width = template.mem_width or 4
    offset = step.instruction.operand("imm", 0) if template.has_slot("imm") else 0
    address = (step.before.x[step.instruction.operand("rs1")] + offset) & MASK64
    reserved = prev["reserved"]
    if step.iclass == "lr":
        reserved = 1
    elif step.iclass == "sc":
        reserved = 0
    return {
        "acc_type": kind,
        "acc_size": ACCESS_SIZES.get(width, 2),
        "misalign": int(address % width != 0),
        "in_data": int(data_base <= address < data_end),
        "reserved": reserved,
        "prev_type": prev["acc_type"],
        "addr_q": address & 0xFFF,
    }


def _boxed(value: int) -> bool:
    return value >> 32 == 0xFFFFFFFF


def _fpu(prev: Mapping[str, int], step: Retirement) -> Dict[str, int]:
    regs = dict(prev)
    regs["sticky"] = step.after.fflags
    instruction = step.instruction
    if instruction is None or instruction.mnemonic not in FP_OPS:
        return regs
    template = instruction.template
    rm = 0
    if template.has_slot("rm"):
        rm = instruction.operand("rm")
        if rm == RM_DYN:
            rm = step.before.frm
    unboxed = any(
        not _boxed(step.before.f[instruction.operand(name)])
        for name in ("rs1", "rs2", "rs3")
        if template.has_slot(name) and template.slot(name).fp
    )
    regs["op_q"] = (FP_OPS.index(instruction.mnemonic) % 15) + 1
    regs["rm_q"] = rm & 0x7
    regs["unboxed"] = int(unboxed)
    if template.has_slot("rd") and template.slot("rd").fp:
        regs["mant_q"] = step.after.f[instruction.operand("rd")] & 0x7FFFFF
    return regs


def _muldiv_special(instruction: Instruction, before: ArchState) -> int:
    word_op = instruction.mnemonic.endswith("w")
    bits = 32 if word_op else 64
    mask = (1 << bits) - 1
    dividend = before.x[instruction.operand("rs1")] & mask
    divisor = before.x[instruction.operand("rs2")] & mask
    if instruction.mnemonic.startswith(("div", "rem")):
        if divisor == 0:
            return 1
        signed = instruction.mnemonic[3:4] != "u"
        if signed and dividend == 1 << (bits - 1) and divisor == mask:
            return 2
        return 0
    return 3 if dividend == 0 or divisor == 0 else 0


def _muldiv(prev: Mapping[str, int], step: Retirement) -> Dict[str, int]:
    if step.iclass != "muldiv" or step.instruction is None or step.trap is not None:
        return {"md_op": prev["md_op"], "md_special": prev["md_special"], "md_run": 0}
    return {
        "md_op": step.instruction.template.fixed_value("funct3") or 0,
        "md_special": _muldiv_special(step.instruction, step.before),
        "md_run": min(prev["md_run"] + 1, 7),
    }


def _csrfile(prev: Mapping[str, int], step: Retirement) -> Dict[str, int]:
    regs = {
        "sel_q": prev["sel_q"],
        "op_q": prev["op_q"],
        "frm_q": step.after.frm,
        "cause_q": 0 if step.trap is None else (step.trap % 7) + 1,
        "trap_pend": int(prev["cause_q"] != 0),
    }
    if step.iclass == "csr" and step.instruction is not None:
        regs["sel_q"] = CSR_CLASSES.get(step.instruction.operand("csr"), 0)
        regs["op_q"] = CSR_OPS[step.instruction.mnemonic]
    return regs


def _seqdet(prev: Mapping[str, int], step: Retirement) -> Dict[str, int]:
    state, tag = prev["seq_state"], prev["seq_tag"]
    instruction = step.instruction
    if instruction is None or step.trap is not None:
        return {"seq_state": SEQ_IDLE, "seq_tag": tag}
    rd = instruction.operand("rd", 0) if instruction.template.has_slot("rd") else 0
    if step.iclass == "muldiv" and rd:
        return {"seq_state": SEQ_PRODUCED, "seq_tag": rd}
    if state == SEQ_PRODUCED and step.iclass in ("alu", "alu_imm") and rd and step.reads(tag):
        return {"seq_state": SEQ_CONSUMED, "seq_tag": rd}
    if state == SEQ_CONSUMED and step.iclass == "branch" and step.backward and step.reads(tag):
        return {"seq_state": SEQ_LOOPED, "seq_tag": tag}
    return {"seq_state": SEQ_IDLE, "seq_tag": tag}


def next_shadow(prev: ShadowState, step: Retirement, data_base: int, data_end: int) -> ShadowState:
    """Shadow registers after ``step``; ``prev`` is not modified."""
    return {
        "frontend": _frontend(prev["frontend"], step),
        "lsu": _lsu(prev["lsu"], step, data_base, data_end),
        "fpu": _fpu(prev["fpu"], step),
        "muldiv": _muldiv(prev["muldiv"], step),
        "csrfile": _csrfile(prev["csrfile"], step),
        "seqdet": _seqdet(prev["seqdet"], step),
        "core": {"priv": step.after.priv & 0x3},
    }


class ShadowModel:
    """Current shadow registers of one DUT core."""

    def __init__(self, data_base: int, data_end: int, registers: Optional[ShadowState] = None):
        self.data_base = data_base
        self.data_end = data_end
        self.registers: ShadowState = registers if registers is not None else reset_shadow()

    def step(self, retirement: Retirement) -> ShadowState:
        self.registers = next_shadow(self.registers, retirement, self.data_base, self.data_end)
        return self.registers

    def snapshot(self) -> ShadowState:
        return {module: dict(regs) for module, regs in self.registers.items()}
