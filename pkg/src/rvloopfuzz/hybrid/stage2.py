"""Stage 2: refine marked intervals by perturbing their initialization values.

A variant keeps every opcode and register operand of its benchmark. Only the values the
prologue loads, data addresses held in registers and non-control-flow immediates move,
so the register dependency graph of the interval body never changes.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import structlog

from ..corpus import Corpus, Seed, SeedOrigin
from ..coverage import CoverageMap, Instrumentation
from ..genmut import FuzzIteration, Lfsr
from ..harness.state import MASK64
from ..isa import BlockKind, Instruction
from ..models import HarnessConfig, HybridConfig
from .benchmarks import Benchmark
from .context import NAN_BOX
from .stage1 import RepInterval, interval_seed_iteration, run_interval

logger = structlog.get_logger(__name__)

ADDRESS_ALIGN = 8
VALUE_STEP = 1
FP_STEP = 1 << 16
MEMORY_IMM_STEP = 8
MAX_MAGNITUDE = 4

Dependency = Tuple[int, int, str]


class ParamKind(str, Enum):
    """What a perturbation parameter moves."""

    ADDRESS = "address"
    REG = "reg"
    FREG = "freg"
    IMM = "imm"


@dataclass(frozen=True)
class Param:
    """One perturbable value: a register of the entry state or an immediate of the program."""

    kind: ParamKind
    index: int
    step: int

    def __str__(self) -> str:
        prefix = {ParamKind.FREG: "f", ParamKind.IMM: "imm@"}.get(self.kind, "x")
        return f"{prefix}{self.index}"


def _in_data(value: int, harness: HarnessConfig) -> bool:
    return harness.data_base <= value < harness.data_base + harness.data_size


def perturbation_parameters(
    interval: RepInterval, benchmark: Benchmark, harness: HarnessConfig
) -> List[Param]:
    """Registers with a nonzero entry value and immediates of non-control-flow instructions.

    Integer registers pointing into the data segment become address parameters, which
    move in aligned steps and stay inside the segment.
    """
    params: List[Param] = []
    for index in range(1, 32):
        value = interval.state.x[index]
        if value == 0:
            continue
        if _in_data(value, harness):
            params.append(Param(ParamKind.ADDRESS, index, ADDRESS_ALIGN))
        else:
            params.append(Param(ParamKind.REG, index, VALUE_STEP))
    for index, bits in enumerate(interval.state.f):
        if bits != 0:
            params.append(Param(ParamKind.FREG, index, FP_STEP))
    for position, instruction in enumerate(benchmark.program):
        template = instruction.template
        if template.is_control_flow or not template.has_slot("imm"):
            continue
        step = MEMORY_IMM_STEP if template.is_memory else VALUE_STEP
        params.append(Param(ParamKind.IMM, position, step))
    return params


def _clamp(value: int, bounds: Tuple[int, int]) -> int:
    low, high = bounds
    return max(low, min(high, value))


def apply_perturbation(
    interval: RepInterval,
    benchmark: Benchmark,
    offsets: Mapping[Param, int],
    harness: HarnessConfig,
) -> FuzzIteration:
    """The interval seed with every parameter moved by ``offset * step``.

    Empty ``offsets`` rebuild the original interval seed.
    """
    state = interval.state.copy()
    program = list(benchmark.program)
    for param, offset in offsets.items():
        delta = offset * param.step
        if param.kind is ParamKind.ADDRESS:
            value = state.x[param.index]
            moved = (value - harness.data_base + delta) % harness.data_size
            state.x[param.index] = harness.data_base + moved
        elif param.kind is ParamKind.REG:
            state.x[param.index] = (state.x[param.index] + delta) & MASK64
        elif param.kind is ParamKind.FREG:
            low = (state.f[param.index] + delta) & 0xFFFF_FFFF
            state.f[param.index] = NAN_BOX | low
        else:
            instruction = program[param.index]
            bounds = instruction.template.slot("imm").field.value_range()
            moved = _clamp(instruction.operand("imm") + delta, bounds)
            program[param.index] = instruction.replace(imm=moved)
    variant = RepInterval(
        benchmark=interval.benchmark,
        start=interval.start,
        end=interval.end,
        entry_pc=interval.entry_pc,
        state=state,
        memory_overlay=interval.memory_overlay,
        weight=interval.weight,
    )
    return interval_seed_iteration(variant, benchmark, harness, program)


def dependency_graph(program: Sequence[Instruction]) -> FrozenSet[Dependency]:
    """Static register dependencies as (producer, consumer, register) triples.

    The producer is the closest earlier instruction writing the register, or -1 when the
    value comes from the entry state. x0 carries no dependency.
    """
    last_writer: Dict[str, int] = {}
    edges = set()
    for position, instruction in enumerate(program):
        template = instruction.template
        for slot in template.slots:
            if slot.name not in ("rs1", "rs2", "rs3"):
                continue
            register = _register(slot.fp, instruction.operand(slot.name))
            if register is not None:
                edges.add((last_writer.get(register, -1), position, register))
        if template.has_slot("rd"):
            register = _register(template.slot("rd").fp, instruction.operand("rd"))
            if register is not None:
                last_writer[register] = position
    return frozenset(edges)


def _register(fp: bool, number: int) -> Optional[str]:
    if fp:
        return f"f{number}"
    return f"x{number}" if number else None


def opcode_sequence(program: Sequence[Instruction]) -> List[str]:
    return [instruction.mnemonic for instruction in program]


@dataclass
class Refinement:
    """Stage-2 history of one marked interval."""

    interval: RepInterval
    variants: int = 0
    gain: int = 0
    accepted: int = 0
    instructions: int = 0
    stop_reason: str = ""
    window_gains: List[int] = field(default_factory=list)

    def __str__(self) -> str:
        return (
            f"Refinement({self.interval.benchmark}@{self.interval.start}, "
            f"variants={self.variants}, gain={self.gain}, stop={self.stop_reason})"
        )


@dataclass
class Stage2Result:
    refinements: List[Refinement]
    seeds: List[Seed]

    @property
    def variants(self) -> int:
        return sum(r.variants for r in self.refinements)

    @property
    def gain(self) -> int:
        return sum(r.gain for r in self.refinements)

    @property
    def instructions(self) -> int:
        return sum(r.instructions for r in self.refinements)

    def __str__(self) -> str:
        return (
            f"Stage2Result(intervals={len(self.refinements)}, variants={self.variants}, "
            f"gain={self.gain})"
        )


def refine_interval(
    interval: RepInterval,
    benchmark: Benchmark,
    config: HybridConfig,
    harness: HarnessConfig,
    lfsr: Lfsr,
    instrumentation: Instrumentation,
    covmap: CoverageMap,
    corpus: Optional[Corpus] = None,
    seeds: Optional[List[Seed]] = None,
) -> Refinement:
    """Hill-climb one interval's parameters until coverage gain plateaus.

    A gainful move is kept and the same parameter is pushed again in the same direction;
    a fruitless move is undone and the next parameter and direction are drawn afresh. A
    window of ``stage2_window`` variants whose summed gain stays below
    ``plateau_threshold`` counts as flat; ``plateau_windows`` flat windows in a row end
    the loop, as does ``max_variants``.
    """
    refinement = Refinement(interval)
    params = perturbation_parameters(interval, benchmark, harness)
    if not params:
        refinement.stop_reason = "no_parameters"
        return refinement

    offsets: Dict[Param, int] = {}
    current: Optional[Param] = None
    direction = 1
    window_gain = 0
    flat_windows = 0
    while refinement.variants < config.max_variants:
        if current is None:
            current = params[lfsr.randbelow(len(params))]
            direction = 1 if lfsr.chance(0.5) else -1
        magnitude = 1 + lfsr.randbelow(MAX_MAGNITUDE)
        trial = dict(offsets)
        trial[current] = trial.get(current, 0) + direction * magnitude

        iteration = apply_perturbation(interval, benchmark, trial, harness)
        head = iteration.blocks[0]
        prologue_steps = head.length if head.kind is BlockKind.PROLOGUE else 0
        budget = prologue_steps + interval.end - interval.start
        execution = run_interval(iteration, budget, harness, instrumentation, covmap)
        gain = len(execution.dut.new_points)
        refinement.variants += 1
        refinement.instructions += execution.dut_lane.executed_count
        refinement.gain += gain
        window_gain += gain

        if gain > 0:
            offsets = trial
            refinement.accepted += 1
            if corpus is not None:
                seed = corpus.new_seed(iteration, SeedOrigin.HYBRID, parent_id=interval.seed_id)
                corpus.insert_seed(seed, gain)
                if seeds is not None:
                    seeds.append(seed)
        else:
            current = None

        if refinement.variants % config.stage2_window == 0:
            refinement.window_gains.append(window_gain)
            flat_windows = flat_windows + 1 if window_gain < config.plateau_threshold else 0
            window_gain = 0
            if flat_windows >= config.plateau_windows:
                refinement.stop_reason = "plateau"
                break
    else:
        refinement.stop_reason = "max_variants"

    logger.info(
        "stage2_interval_refined",
        benchmark=interval.benchmark,
        start=interval.start,
        variants=refinement.variants,
        accepted=refinement.accepted,
        gain=refinement.gain,
        stop_reason=refinement.stop_reason,
    )
    return refinement


def run_stage2(
    intervals: Sequence[RepInterval],
    benchmarks: Sequence[Benchmark],
    config: HybridConfig,
    harness: Optional[HarnessConfig],
    lfsr: Lfsr,
    instrumentation: Optional[Instrumentation] = None,
    covmap: Optional[CoverageMap] = None,
    corpus: Optional[Corpus] = None,
) -> Stage2Result:
    """Refine every marked interval in order; unmarked intervals are left alone."""
    harness = harness or HarnessConfig()
    instrumentation = instrumentation or Instrumentation.default()
    covmap = covmap if covmap is not None else instrumentation.new_map()
    by_name = {b.name: b for b in benchmarks}
    seeds: List[Seed] = []
    refinements = [
        refine_interval(
            interval, by_name[interval.benchmark], config, harness, lfsr,
            instrumentation, covmap, corpus, seeds,
        )  # fmt: skip
        for interval in intervals
        if interval.marked
    ]
    result = Stage2Result(refinements, seeds)
    logger.info(
        "stage2_completed",
        intervals=len(refinements),
        variants=result.variants,
        gain=result.gain,
    )
    return result


__all__ = [
    "Param",
    "ParamKind",
    "Refinement",
    "Stage2Result",
    "apply_perturbation",
    "dependency_graph",
    "opcode_sequence",
    "perturbation_parameters",
    "refine_interval",
    "run_stage2",
]
