"""Hand-written smoke programs the corpus starts from."""

from typing import Callable, Dict, List, Optional

from ..genmut import iteration_from_program
from ..isa import Assembler, Instruction, InstructionLibrary, default_library
from ..isa.csrs import FCSR, FFLAGS, FRM, MSCRATCH
from ..models import HarnessConfig
from .seed import Seed, SeedOrigin


def _arith(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("a0", 10)
        .li("a1", 0)
        .label("loop")
        .emit("add", rd="a1", rs1="a1", rs2="a0")
        .emit("addi", rd="a0", rs1="a0", imm=-1)
        .branch("bne", "a0", "zero", "loop")
        .emit("sltiu", rd="a2", rs1="a1", imm=56)
        .emit("sraiw", rd="a3", rs1="a1", shamt5=2)
        .assemble()
    )


def _muldiv(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("a0", -7)
        .li("a1", 3)
        .emit("mul", rd="a2", rs1="a0", rs2="a1")
        .emit("div", rd="a3", rs1="a0", rs2="a1")
        .emit("rem", rd="a4", rs1="a0", rs2="a1")
        .emit("divu", rd="a5", rs1="a0", rs2="zero")
        .emit("mulhsu", rd="a6", rs1="a0", rs2="a1")
        .assemble()
    )


def _memory(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("t0", harness.data_base)
        .li("t1", 0x1234)
        .emit("sw", rs1="t0", rs2="t1", imm=0)
        .emit("lw", rd="t2", rs1="t0", imm=0)
        .emit("sd", rs1="t0", rs2="t1", imm=8)
        .emit("ld", rd="t3", rs1="t0", imm=8)
        .emit("lbu", rd="t4", rs1="t0", imm=1)
        .assemble()
    )


def _atomic(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("t0", harness.data_base + 64)
        .li("t1", 5)
        .emit("amoadd.w", rd="t2", rs1="t0", rs2="t1")
        .emit("lr.w", rd="t3", rs1="t0")
        .emit("sc.w", rd="t4", rs1="t0", rs2="t1")
        .emit("amomax.d", rd="t5", rs1="t0", rs2="t1")
        .assemble()
    )


def _float(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("t0", 0x3F800000)
        .emit("fmv.w.x", rd=1, rs1="t0")
        .li("t0", 0x40000000)
        .emit("fmv.w.x", rd=2, rs1="t0")
        .emit("fadd.s", rd=3, rs1=1, rs2=2, rm=7)
        .emit("fdiv.s", rd=4, rs1=1, rs2=2, rm=0)
        .emit("fsqrt.s", rd=5, rs1=2, rm=0)
        .emit("fcvt.w.s", rd="a0", rs1=4, rm=1)
        .emit("feq.s", rd="a1", rs1=3, rs2=3)
        .emit("fmv.x.w", rd="a2", rs1=4)
        .assemble()
    )


def _csr(harness: HarnessConfig) -> List[Instruction]:
    return (
        Assembler(harness.code_base)
        .li("t0", 0x55)
        .emit("csrrw", rd="a0", rs1="t0", csr=MSCRATCH)
        .emit("csrrs", rd="a1", rs1="zero", csr=MSCRATCH)
        .emit("csrrwi", rd="zero", uimm=3, csr=FRM)
        .emit("csrrs", rd="a2", rs1="zero", csr=FCSR)
        .emit("csrrc", rd="a3", rs1="zero", csr=FFLAGS)
        .assemble()
    )


BASELINE_PROGRAMS: Dict[str, Callable[[HarnessConfig], List[Instruction]]] = {
    "arith": _arith,
    "muldiv": _muldiv,
    "memory": _memory,
    "atomic": _atomic,
    "float": _float,
    "csr": _csr,
}


def baseline_seeds(
    harness: Optional[HarnessConfig] = None,
    library: Optional[InstructionLibrary] = None,
) -> List[Seed]:
    """Smoke-program seeds whose every instruction is enabled in ``library``."""
    harness = harness or HarnessConfig()
    library = library or default_library()
    seeds: List[Seed] = []
    for name, build in BASELINE_PROGRAMS.items():
        program = build(harness)
        if not all(library.is_enabled(instruction.template) for instruction in program):
            continue
        iteration = iteration_from_program(
            program, harness.code_base, harness.code_base, library, data_seed=len(seeds) + 1
        )
        seeds.append(Seed(len(seeds), iteration, SeedOrigin.BASELINE))
    return seeds
