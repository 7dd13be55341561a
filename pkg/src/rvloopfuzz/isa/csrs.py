"""Control and status registers modeled by the interpreters."""

from typing import Dict, Tuple

FFLAGS = 0x001
FRM = 0x002
FCSR = 0x003
MISA = 0x301
MTVEC = 0x305
MSCRATCH = 0x340
MEPC = 0x341
MCAUSE = 0x342
MINSTRET = 0xB02

CSR_NAMES: Dict[int, str] = {
    FFLAGS: "fflags",
    FRM: "frm",
    FCSR: "fcsr",
    MISA: "misa",
    MTVEC: "mtvec",
    MSCRATCH: "mscratch",
    MEPC: "mepc",
    MCAUSE: "mcause",
    MINSTRET: "minstret",
}

# CSRs operand assignment draws from. mtvec stays fixed so handler accounting is stable.
FUZZ_CSRS: Tuple[int, ...] = (FFLAGS, FRM, FCSR, MSCRATCH, MEPC, MCAUSE, MINSTRET, MISA)

# Writes to these are ignored.
READ_ONLY_CSRS = frozenset({MISA, MINSTRET})

# Accrued exception flags.
FLAG_NV = 0x10
FLAG_DZ = 0x08
FLAG_OF = 0x04
FLAG_UF = 0x02
FLAG_NX = 0x01

# Rounding modes
RM_RNE = 0
RM_RTZ = 1
RM_RDN = 2
RM_RUP = 3
RM_RMM = 4
RM_DYN = 7
VALID_RM = (RM_RNE, RM_RTZ, RM_RDN, RM_RUP, RM_RMM)


def csr_name(address: int) -> str:
    return CSR_NAMES.get(address, f"csr{address:#05x}")
