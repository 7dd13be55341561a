"""Step drivers: one `Lane` per interpreter, an `Execution` pairing DUT and REF lanes.

A lane owns the control flow around its interpreter: fetch, trap handling through the
exception templates, the per-branch loop guard, retirement accounting and x0 pinning.
Both interpreters are driven by the same lane code, so any divergence comes from the
interpreters themselves.
"""

from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Set, Tuple

import structlog

from ..coverage import CoverageMap, Instrumentation
from ..genmut import FuzzIteration
from ..isa.csrs import MCAUSE, MEPC
from ..models import HarnessConfig, Mismatch, Outcome, RunReport
from .bugs import BugSpec
from .dut import DutCore
from .memory import MemoryImage, build_memory
from .records import FieldDiff, Retired, StepRecord, compare_records
from .ref import RefCore
from .state import ArchState
from .traps import DEFAULT_TEMPLATES, ArchTrap, ExceptionTemplate, Resume, handle_exception

logger = structlog.get_logger(__name__)


class Interpreter(Protocol):
    """What a lane needs from an interpreter core."""

    state: ArchState
    memory: MemoryImage
    reservation: Optional[int]

    def begin_step(self) -> None: ...

    def execute(self, pc: int, word: int, realign: bool = False) -> Retired: ...

    def after_trap(self, trap: ArchTrap) -> None: ...

    def end_step(self, record: StepRecord) -> None: ...


class Lane:
    """Drives one interpreter one step at a time and keeps its accounting."""

    def __init__(
        self,
        interp: Interpreter,
        templates: Sequence[ExceptionTemplate] = DEFAULT_TEMPLATES,
        loop_ceiling: Optional[int] = 64,
    ):
        self.interp = interp
        self.templates = tuple(templates)
        self.loop_ceiling = loop_ceiling
        self.pc = interp.state.pc
        self.ordinal = 0
        self.taken: Dict[int, int] = {}
        self.retired = 0
        self.handler_cost = 0
        self.fuzz_retired = 0
        self.retired_pcs: Set[int] = set()
        self.exceptions_handled = 0
        self.abandoned_cause: Optional[int] = None

    @property
    def memory(self) -> MemoryImage:
        return self.interp.memory

    @property
    def state(self) -> ArchState:
        return self.interp.state

    @property
    def at_boundary(self) -> bool:
        return self.pc == self.memory.code_boundary

    @property
    def finished(self) -> bool:
        return self.at_boundary or self.abandoned_cause is not None

    @property
    def executed_count(self) -> int:
        return self.retired + self.handler_cost

    def step(self) -> StepRecord:
        """Run the instruction at the current pc, handling any trap it raises."""
        interp, state, pc = self.interp, self.interp.state, self.pc
        state.pc = pc
        interp.begin_step()
        word = 0
        try:
            word = self.memory.fetch(pc)
            result = interp.execute(pc, word)
        except ArchTrap as trap:
            record = self._trapped(pc, word, trap)
        else:
            state.count_retired()
            self._count(pc)
            record = StepRecord(
                self.ordinal, pc, word, self._guard(pc, result.next_pc), state.minstret,
                rd=result.rd, csrs=result.csrs,
            )  # fmt: skip
        state.x[0] = 0
        self.pc = state.pc = record.next_pc
        interp.end_step(record)
        self.ordinal += 1
        return record

    def _count(self, pc: int) -> None:
        self.retired += 1
        if self.memory.is_fuzz_instruction(pc):
            self.fuzz_retired += 1
        if pc in self.memory.block_addresses:
            self.retired_pcs.add(pc)

    def _guard(self, pc: int, next_pc: int) -> int:
        if self.loop_ceiling is None or next_pc == pc + 4:
            return next_pc
        count = self.taken.get(pc, 0) + 1
        self.taken[pc] = count
        return pc + 4 if count > self.loop_ceiling else next_pc

    def _trapped(self, pc: int, word: int, trap: ArchTrap) -> StepRecord:
        interp, state = self.interp, self.interp.state
        handled = handle_exception(state, trap, self.templates)
        rd = None
        csrs = {"mepc": state.csrs[MEPC], "mcause": state.csrs[MCAUSE]}
        retired = False
        next_pc = pc + 4
        if not handled.resumed or handled.template is None:
            self.abandoned_cause = trap.cause
            next_pc = pc
        else:
            template = handled.template
            self.exceptions_handled += 1
            self.handler_cost += template.cost
            if template.resume is Resume.REPLAY:
                next_pc = pc
                csrs["frm"] = state.frm
            elif template.resume is Resume.REALIGN:
                try:
                    result = interp.execute(pc, word, realign=True)
                except ArchTrap as second:
                    handle_exception(state, second, ())
                    csrs = {"mepc": state.csrs[MEPC], "mcause": state.csrs[MCAUSE]}
                    self.abandoned_cause = second.cause
                    next_pc = pc
                else:
                    state.count_retired()
                    self._count(pc)
                    retired = True
                    rd = result.rd
                    csrs.update(result.csrs)
            elif template.counts_retired:
                self._count(pc)
                retired = True
        interp.after_trap(trap)
        return StepRecord(
            self.ordinal, pc, word, next_pc, state.minstret,
            trap=trap.cause, rd=rd, csrs=csrs, retired=retired,
        )  # fmt: skip


class Execution:
    """A DUT and a REF core stepping in lockstep through one memory image.

    The run pauses at the first step whose records differ; ``mismatch`` then holds the
    DUT record and the differing field.
    """

    def __init__(
        self,
        iteration: FuzzIteration,
        config: Optional[HarnessConfig] = None,
        instrumentation: Optional[Instrumentation] = None,
        covmap: Optional[CoverageMap] = None,
        bugs: Iterable["BugSpec | str"] = (),
        budget: Optional[int] = None,
        memory: Optional[MemoryImage] = None,
        templates: Sequence[ExceptionTemplate] = DEFAULT_TEMPLATES,
        record_traces: bool = False,
    ):
        self.iteration = iteration
        self.config = config or HarnessConfig()
        memory = memory or build_memory(iteration, self.config)
        self.dut = DutCore(memory, self.config, instrumentation, covmap, bugs)
        self.ref = RefCore(memory.copy(), self.config)
        self.dut_lane = Lane(self.dut, templates, self.config.loop_ceiling)
        self.ref_lane = Lane(self.ref, templates, self.config.loop_ceiling)
        self.budget = budget if budget is not None else self.config.budget_factor * iteration.instruction_count
        self.outcome: Optional[Outcome] = None
        self.mismatch: Optional[Tuple[StepRecord, FieldDiff]] = None
        self.record_traces = record_traces
        self.dut_trace: List[StepRecord] = []
        self.ref_trace: List[StepRecord] = []

    @property
    def ordinal(self) -> int:
        """Ordinal of the next step."""
        return self.dut_lane.ordinal

    def step(self) -> bool:
        """Advance both cores by one step; returns False once the run has ended."""
        if self.outcome is not None:
            return False
        if self.dut_lane.at_boundary and self.ref_lane.at_boundary:
            self.outcome = Outcome.COMPLETED
            return False
        if self.ordinal >= self.budget:
            self.outcome = Outcome.BUDGET_EXHAUSTED
            return False

        dut_record = self.dut_lane.step()
        ref_record = self.ref_lane.step()
        if self.record_traces:
            self.dut_trace.append(dut_record)
            self.ref_trace.append(ref_record)
        diff = compare_records(dut_record, ref_record)
        if diff is not None:
            self.mismatch = (dut_record, diff)
            self.outcome = Outcome.MISMATCH
            return False
        if self.dut_lane.abandoned_cause is not None:
            self.outcome = Outcome.ABANDONED
            return False
        return True

    def run(self, until: Optional[int] = None) -> Optional[Outcome]:
        """Step until the run ends, or until ``until`` steps have been taken."""
        while until is None or self.ordinal < until:
            if not self.step():
                break
        return self.outcome

    def report(self, snapshot_path: Optional[str] = None) -> RunReport:
        lane = self.dut_lane
        mismatch = None
        if self.mismatch is not None:
            record, diff = self.mismatch
            mismatch = Mismatch(
                ordinal=record.ordinal,
                pc=record.pc,
                word=record.word,
                field=diff.field,
                dut_value=diff.dut_value,
                ref_value=diff.ref_value,
                snapshot_path=snapshot_path,
            )
        return RunReport(
            executed_count=lane.executed_count,
            fuzzing_instruction_count=lane.fuzz_retired,
            retired_count=lane.retired,
            steps=lane.ordinal,
            generated_count=self.dut.memory.generated_count,
            distinct_executed=len(lane.retired_pcs),
            coverage_delta=len(self.dut.new_points),
            new_point_keys=list(self.dut.new_points),
            outcome=self.outcome or Outcome.BUDGET_EXHAUSTED,
            mismatch=mismatch,
            exceptions_handled=lane.exceptions_handled,
            abandoned_cause=lane.abandoned_cause,
        )


def run_lane(lane: Lane, budget: int) -> List[StepRecord]:
    """Step one lane on its own until it finishes or spends ``budget`` steps."""
    trace: List[StepRecord] = []
    while not lane.finished and lane.ordinal < budget:
        trace.append(lane.step())
    return trace
