"""Architectural state shared by the DUT and reference interpreters."""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

from ..isa.csrs import FCSR, MCAUSE, MEPC, MINSTRET, MISA, MSCRATCH, MTVEC, csr_name
from ..serialization import JsonSerializableMixin

MASK32 = (1 << 32) - 1
MASK64 = (1 << 64) - 1

# misa: MXL=2 (RV64) plus one bit per extension letter.
MISA_MXL64 = 2 << 62
MISA_BITS = {"A": 1 << 0, "F": 1 << 5, "I": 1 << 8, "M": 1 << 12}
PRIV_MACHINE = 3

STATE_CSRS = (FCSR, MISA, MTVEC, MSCRATCH, MEPC, MCAUSE, MINSTRET)


def misa_value(enabled: Iterable[str]) -> int:
    """misa for the enabled categories; ZiCsr has no letter."""
    value = MISA_MXL64
    for category in enabled:
        value |= MISA_BITS.get(category, 0)
    return value


def sext(value: int, bits: int) -> int:
    """Sign-extend the low ``bits`` of value to a Python int."""
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


@dataclass
class ArchState(JsonSerializableMixin):
    """PC, integer and FP register files, modeled CSRs and privilege.

    Registers hold unsigned 64-bit values. ``x[0]`` is pinned to zero by `set_x`.
    FP registers hold raw 64-bit patterns, single-precision values NaN-boxed.
    """

    pc: int
    x: List[int] = field(default_factory=lambda: [0] * 32)
    f: List[int] = field(default_factory=lambda: [0] * 32)
    csrs: Dict[int, int] = field(default_factory=dict)
    priv: int = PRIV_MACHINE

    @classmethod
    def reset(cls, pc: int, enabled: Iterable[str] = ("I", "M", "F", "A", "ZiCsr")) -> "ArchState":
        csrs = {csr: 0 for csr in STATE_CSRS}
        csrs[MISA] = misa_value(enabled)
        return cls(pc=pc, csrs=csrs)

    def set_x(self, index: int, value: int) -> None:
        if index:
            self.x[index] = value & MASK64

    @property
    def fcsr(self) -> int:
        return self.csrs[FCSR]

    @property
    def fflags(self) -> int:
        return self.csrs[FCSR] & 0x1F

    @property
    def frm(self) -> int:
        return (self.csrs[FCSR] >> 5) & 0x7

    @property
    def minstret(self) -> int:
        return self.csrs[MINSTRET]

    def accrue(self, flags: int) -> None:
        self.csrs[FCSR] |= flags & 0x1F

    def set_frm(self, frm: int) -> None:
        self.csrs[FCSR] = (self.csrs[FCSR] & 0x1F) | ((frm & 0x7) << 5)

    def count_retired(self) -> None:
        self.csrs[MINSTRET] = (self.csrs[MINSTRET] + 1) & MASK64

    def copy(self) -> "ArchState":
        return ArchState(self.pc, list(self.x), list(self.f), dict(self.csrs), self.priv)

    def diff(self, other: "ArchState") -> List[str]:
        """Names of the fields that differ, in comparison order."""
        changed = []
        if self.pc != other.pc:
            changed.append("pc")
        changed += [f"x{i}" for i in range(32) if self.x[i] != other.x[i]]
        changed += [f"f{i}" for i in range(32) if self.f[i] != other.f[i]]
        for csr in sorted(set(self.csrs) | set(other.csrs)):
            if self.csrs.get(csr) != other.csrs.get(csr):
                changed.append(csr_name(csr))
        if self.priv != other.priv:
            changed.append("priv")
        return changed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pc": self.pc,
            "x": list(self.x),
            "f": list(self.f),
            "csrs": {f"{csr:#05x}": value for csr, value in sorted(self.csrs.items())},
            "priv": self.priv,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArchState":
        return cls(
            pc=data["pc"],
            x=list(data["x"]),
            f=list(data["f"]),
            csrs={int(k, 16): v for k, v in data["csrs"].items()},
            priv=data.get("priv", PRIV_MACHINE),
        )

    def __str__(self) -> str:
        live = sum(1 for v in self.x if v)
        return f"ArchState(pc={self.pc:#x}, live_x={live}, minstret={self.minstret})"
