"""Per-step records produced by both interpreters and their comparison."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple


@dataclass(frozen=True)
class Retired:
    """What an interpreter reports for an instruction that completed without trapping."""

    next_pc: int
    rd: Optional[Tuple[str, int]] = None
    csrs: Dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class StepRecord:
    """Observable result of one step attempt.

    A trap step records the cause and the state left by the handler; ``retired``
    tells whether the step counted as a retired instruction.
    """

    ordinal: int
    pc: int
    word: int
    next_pc: int
    minstret: int
    trap: Optional[int] = None
    rd: Optional[Tuple[str, int]] = None
    csrs: Dict[str, int] = field(default_factory=dict)
    retired: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ordinal": self.ordinal,
            "pc": self.pc,
            "word": self.word,
            "next_pc": self.next_pc,
            "minstret": self.minstret,
            "trap": self.trap,
            "rd": list(self.rd) if self.rd else None,
            "csrs": dict(sorted(self.csrs.items())),
            "retired": self.retired,
        }


@dataclass(frozen=True)
class FieldDiff:
    """One differing field of two records, values rendered for reports."""

    field: str
    dut_value: str
    ref_value: str


def _hex(value: Optional[int]) -> str:
    return "none" if value is None else f"{value:#x}"


def _rd_text(rd: Optional[Tuple[str, int]]) -> str:
    return "none" if rd is None else f"{rd[0]}={rd[1]:#x}"


def compare_records(dut: StepRecord, ref: StepRecord) -> Optional[FieldDiff]:
    """First differing field in the order pc, trap, rd, CSRs by name, minstret, next_pc."""
    if dut.pc != ref.pc:
        return FieldDiff("pc", _hex(dut.pc), _hex(ref.pc))
    if dut.trap != ref.trap:
        return FieldDiff("trap", _hex(dut.trap), _hex(ref.trap))
    if dut.rd != ref.rd:
        if dut.rd and ref.rd and dut.rd[0] == ref.rd[0]:
            return FieldDiff(dut.rd[0], _hex(dut.rd[1]), _hex(ref.rd[1]))
        return FieldDiff("rd", _rd_text(dut.rd), _rd_text(ref.rd))
    for name in sorted(set(dut.csrs) | set(ref.csrs)):
        left, right = dut.csrs.get(name), ref.csrs.get(name)
        if left != right:
            return FieldDiff(name, _hex(left), _hex(right))
    if dut.minstret != ref.minstret:
        return FieldDiff("minstret", _hex(dut.minstret), _hex(ref.minstret))
    if dut.next_pc != ref.next_pc:
        return FieldDiff("next_pc", _hex(dut.next_pc), _hex(ref.next_pc))
    return None


def first_divergence(
    dut_trace: Sequence[StepRecord], ref_trace: Sequence[StepRecord]
) -> Optional[Tuple[int, FieldDiff]]:
    """Offline full-trace diff: ordinal and field of the first differing step.

    A trace that ends early diverges at its length with field ``length``.
    """
    for dut, ref in zip(dut_trace, ref_trace):
        diff = compare_records(dut, ref)
        if diff is not None:
            return dut.ordinal, diff
    if len(dut_trace) != len(ref_trace):
        ordinal = min(len(dut_trace), len(ref_trace))
        return ordinal, FieldDiff("length", str(len(dut_trace)), str(len(ref_trace)))
    return None


def trace_digest(trace: List[StepRecord]) -> Tuple[Tuple[Any, ...], ...]:
    """Hashable form of a trace, for equality checks across replays."""
    return tuple(
        (r.ordinal, r.pc, r.word, r.next_pc, r.minstret, r.trap, r.rd, tuple(sorted(r.csrs.items())))
        for r in trace
    )
