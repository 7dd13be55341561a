"""Benchmark replay on the reference core, interval context capture and prologue synthesis."""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set

import structlog

from ..genmut import FuzzIteration, basic_block_leaders, iteration_from_program
from ..harness import ArchState, Lane, RefCore, build_memory, data_segment, misa_value, sext
from ..harness.state import PRIV_MACHINE, STATE_CSRS
from ..isa import BlockKind, Instruction, asm, load_immediate
from ..isa.csrs import FCSR, MCAUSE, MEPC, MINSTRET, MISA, MSCRATCH, MTVEC, csr_name
from ..models import HarnessConfig
from ..validation import DomainError, SynthesisError
from .benchmarks import Benchmark

logger = structlog.get_logger(__name__)

SCRATCH = 5
RESTORED_CSRS = (FCSR, MTVEC, MSCRATCH, MEPC, MCAUSE)
NAN_BOX = 0xFFFF_FFFF_0000_0000
ALL_EXTENSIONS = ("I", "M", "F", "A", "ZiCsr")


def enabled_extensions(harness: Optional[HarnessConfig] = None) -> List[str]:
    disabled = set((harness or HarnessConfig()).disabled_extensions)
    return [c for c in ALL_EXTENSIONS if c not in disabled]


def tracing_config(harness: Optional[HarnessConfig] = None) -> HarnessConfig:
    """Harness settings for replaying benchmarks: no loop guard, no injected bugs."""
    return (harness or HarnessConfig()).model_copy(update={"loop_ceiling": None, "bugs": []})


def benchmark_iteration(
    benchmark: Benchmark,
    harness: Optional[HarnessConfig] = None,
    prologue: Sequence[Instruction] = (),
    entry_pc: Optional[int] = None,
    memory_overlay: Optional[Mapping[int, int]] = None,
    program: Optional[Sequence[Instruction]] = None,
) -> FuzzIteration:
    """Lay a benchmark (or a same-shaped variant ``program``) out as benchmark blocks."""
    harness = harness or HarnessConfig()
    return iteration_from_program(
        program if program is not None else benchmark.program,
        benchmark.base,
        harness.code_base,
        kind=BlockKind.BENCHMARK,
        prologue=prologue,
        entry_pc=entry_pc,
        data_seed=benchmark.data_seed,
        memory_overlay=memory_overlay,
    )


def program_layout(
    benchmark: Benchmark, iteration: FuzzIteration, entry_pc: Optional[int] = None
) -> Dict[int, int]:
    """Laid-out address to program pc, for every benchmark instruction of ``iteration``."""
    extra = [entry_pc] if entry_pc is not None else []
    leaders = sorted(basic_block_leaders(benchmark.program, benchmark.base, extra))
    blocks = [b for _, b in iteration.surviving() if b.kind is not BlockKind.PROLOGUE]
    layout: Dict[int, int] = {}
    for start, block in zip(leaders, blocks):
        for slot in range(block.length):
            layout[block.address_of(slot)] = start + 4 * slot
    return layout


@dataclass
class BenchmarkTrace:
    """A benchmark run to completion on the reference core.

    ``pcs`` has one entry per step: the program pc of the retired instruction, or None for
    trapped steps and slots outside the benchmark layout.
    """

    benchmark: Benchmark
    iteration: FuzzIteration
    layout: Dict[int, int]
    pcs: List[Optional[int]]
    leaders: Set[int]
    completed: bool

    @property
    def length(self) -> int:
        return len(self.pcs)

    def __str__(self) -> str:
        return f"BenchmarkTrace({self.benchmark.name}, steps={self.length})"


def trace_benchmark(
    benchmark: Benchmark,
    harness: Optional[HarnessConfig] = None,
    max_steps: int = 10_000_000,
) -> BenchmarkTrace:
    """Replay ``benchmark`` on the reference core and record its program-pc trace."""
    config = tracing_config(harness)
    iteration = benchmark_iteration(benchmark, config)
    layout = program_layout(benchmark, iteration)
    lane = Lane(RefCore(build_memory(iteration, config), config), loop_ceiling=None)
    pcs: List[Optional[int]] = []
    while not lane.finished and lane.ordinal < max_steps:
        record = lane.step()
        pcs.append(layout.get(record.pc) if record.trap is None else None)
    if not lane.at_boundary:
        logger.warning(
            "benchmark_trace_truncated",
            benchmark=benchmark.name,
            steps=lane.ordinal,
            abandoned_cause=lane.abandoned_cause,
        )
    logger.debug("benchmark_traced", benchmark=benchmark.name, steps=len(pcs))
    return BenchmarkTrace(
        benchmark=benchmark,
        iteration=iteration,
        layout=layout,
        pcs=pcs,
        leaders=basic_block_leaders(benchmark.program, benchmark.base),
        completed=lane.at_boundary,
    )


@dataclass
class CapturedContext:
    """Reference-core state and data segment before step ``ordinal``."""

    ordinal: int
    state: ArchState
    data: bytes

    def memory_overlay(self, data_base: int, data_seed: int) -> Dict[int, int]:
        """Bytes that differ from the fresh data segment of ``data_seed``."""
        fresh = data_segment(data_seed, len(self.data))
        return {data_base + i: b for i, (b, f) in enumerate(zip(self.data, fresh)) if b != f}


class ReplayCursor:
    """Forward-only replay of an iteration on the reference core.

    Several captures of one program share a single replay when taken in ordinal order.
    """

    def __init__(self, iteration: FuzzIteration, harness: Optional[HarnessConfig] = None):
        self.config = tracing_config(harness)
        self.iteration = iteration
        memory = build_memory(iteration, self.config)
        self.lane = Lane(RefCore(memory, self.config), loop_ceiling=None)

    @property
    def ordinal(self) -> int:
        return self.lane.ordinal

    def advance(self, ordinal: int) -> None:
        """Step until ``ordinal`` steps have been taken.

        Raises:
            DomainError: If ``ordinal`` lies behind the cursor or beyond the end of the program
        """
        if ordinal < self.lane.ordinal:
            raise DomainError(
                f"cannot rewind from step {self.lane.ordinal} to {ordinal}",
                ordinal=ordinal,
                current=self.lane.ordinal,
            )
        while self.lane.ordinal < ordinal:
            if self.lane.finished:
                raise DomainError(
                    f"step {ordinal} is beyond the end of the program ({self.lane.ordinal} steps)",
                    ordinal=ordinal,
                    length=self.lane.ordinal,
                )
            self.lane.step()

    def capture(self) -> CapturedContext:
        lane = self.lane
        return CapturedContext(lane.ordinal, lane.state.copy(), bytes(lane.memory.data))


def capture_context(
    iteration: FuzzIteration, start_ordinal: int, harness: Optional[HarnessConfig] = None
) -> CapturedContext:
    """Exact reference state after replaying ``start_ordinal`` steps from reset.

    Raises:
        DomainError: If the program ends before ``start_ordinal``
    """
    cursor = ReplayCursor(iteration, harness)
    cursor.advance(start_ordinal)
    return cursor.capture()


def synthesize_init(state: ArchState, enabled: Iterable[str] = ALL_EXTENSIONS) -> List[Instruction]:
    """Instructions that, run from reset, leave the registers and CSRs of ``state``.

    CSRs are written first through the scratch register t0, then FP registers, then the
    integer registers with t0 last. Values equal to reset are skipped, so the reset state
    yields an empty prologue; t0 is rewritten last whenever it served as scratch. The pc
    is reached by the jump closing the prologue block and minstret keeps counting.

    Raises:
        SynthesisError: If a field cannot be written from machine mode by library instructions
    """
    if state.priv != PRIV_MACHINE:
        raise SynthesisError(f"privilege {state.priv} cannot be entered", field="priv")
    unknown = sorted(set(state.csrs) - set(STATE_CSRS))
    if unknown:
        name = csr_name(unknown[0])
        raise SynthesisError(f"csr {name} is not modeled", field=name)
    if state.csrs.get(MISA, 0) != misa_value(enabled):
        raise SynthesisError("misa differs from the enabled extensions", field="misa")
    if state.csrs.get(FCSR, 0) >> 8:
        raise SynthesisError("fcsr has reserved bits set", field="fcsr")

    prologue: List[Instruction] = []
    for csr in RESTORED_CSRS:
        value = state.csrs.get(csr, 0)
        if value:
            prologue += load_immediate(SCRATCH, value)
            prologue.append(asm("csrrw", rd=0, rs1=SCRATCH, csr=csr))

    for index, bits in enumerate(state.f):
        if bits == 0:
            continue
        if bits & NAN_BOX != NAN_BOX:
            raise SynthesisError(f"f{index} holds an unboxed value", field=f"f{index}")
        prologue += load_immediate(SCRATCH, sext(bits, 32))
        prologue.append(asm("fmv.w.x", rd=index, rs1=SCRATCH))

    scratch_used = bool(prologue)
    for index in range(1, 32):
        if index != SCRATCH and state.x[index]:
            prologue += load_immediate(index, state.x[index])
    if scratch_used or state.x[SCRATCH]:
        prologue += load_immediate(SCRATCH, state.x[SCRATCH])
    return prologue


def context_diff(expected: ArchState, actual: ArchState) -> List[str]:
    """Fields a prologue failed to recreate; pc and minstret are not compared."""
    return [name for name in expected.diff(actual) if name not in ("pc", csr_name(MINSTRET))]


__all__ = [
    "BenchmarkTrace",
    "CapturedContext",
    "ReplayCursor",
    "benchmark_iteration",
    "capture_context",
    "context_diff",
    "enabled_extensions",
    "program_layout",
    "synthesize_init",
    "trace_benchmark",
    "tracing_config",
]
