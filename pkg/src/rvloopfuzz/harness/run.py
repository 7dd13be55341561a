"""Running iterations: the lockstep entry point and the offline full-trace diff."""

from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import structlog

from ..coverage import CoverageMap, Instrumentation
from ..genmut import FuzzIteration
from ..models import HarnessConfig, Outcome, RunReport
from .bugs import BugSpec
from .dut import DutCore
from .lockstep import Execution, Lane, run_lane
from .memory import build_memory
from .records import FieldDiff, StepRecord, first_divergence
from .ref import RefCore
from .snapshot import take_snapshot

logger = structlog.get_logger(__name__)


def run_iteration(
    iteration: FuzzIteration,
    config: Optional[HarnessConfig] = None,
    instrumentation: Optional[Instrumentation] = None,
    covmap: Optional[CoverageMap] = None,
    bugs: Optional[Iterable["BugSpec | str"]] = None,
    budget: Optional[int] = None,
    snapshot_dir: Optional[Path | str] = None,
    name: str = "iteration",
) -> RunReport:
    """Run one iteration on the DUT and the reference in lockstep.

    Args:
        iteration: Iteration to load
        config: Layout, loop guard and budget settings; its ``bugs`` are injected unless
            ``bugs`` is given
        instrumentation: Coverage instrumentation observing the DUT shadow model
        covmap: Map receiving hits; a fresh one when omitted
        bugs: Bug catalog ids or specs injected into the DUT
        budget: Step budget; ``config.budget_factor`` times the instruction count by default
        snapshot_dir: Where the DUT snapshot is written when a mismatch occurs
        name: File stem of that snapshot

    Returns:
        The run report; budget exhaustion and abandonment are outcomes, not errors
    """
    config = config or HarnessConfig()
    injected = list(config.bugs) if bugs is None else list(bugs)
    execution = Execution(iteration, config, instrumentation, covmap, injected, budget)
    outcome = execution.run()

    snapshot_path = None
    if outcome is Outcome.MISMATCH:
        if snapshot_dir is not None:
            path = Path(snapshot_dir) / f"{name}.snap.json.gz"
            snapshot_path = str(take_snapshot(execution).write(path))
        report = execution.report(snapshot_path)
        mismatch = report.mismatch
        assert mismatch is not None
        logger.warning(
            "lockstep_mismatch",
            ordinal=mismatch.ordinal,
            pc=f"{mismatch.pc:#x}",
            word=f"{mismatch.word:#010x}",
            field=mismatch.field,
            dut=mismatch.dut_value,
            ref=mismatch.ref_value,
            snapshot=snapshot_path,
        )
        return report

    report = execution.report()
    logger.debug(
        "iteration_completed",
        outcome=report.outcome.value,
        executed=report.executed_count,
        prevalence=round(report.prevalence, 4),
        new_points=report.coverage_delta,
    )
    return report


def trace_run(
    iteration: FuzzIteration,
    config: Optional[HarnessConfig] = None,
    bugs: Iterable["BugSpec | str"] = (),
    budget: Optional[int] = None,
) -> Tuple[List[StepRecord], List[StepRecord]]:
    """Full DUT and REF traces, each core run on its own to the end.

    No step is compared while running; `first_divergence` over the two traces gives the
    ground-truth mismatch the lockstep run must report.
    """
    config = config or HarnessConfig()
    memory = build_memory(iteration, config)
    limit = budget if budget is not None else config.budget_factor * iteration.instruction_count
    dut = Lane(DutCore(memory, config, bugs=bugs), loop_ceiling=config.loop_ceiling)
    ref = Lane(RefCore(memory.copy(), config), loop_ceiling=config.loop_ceiling)
    return run_lane(dut, limit), run_lane(ref, limit)


def ground_truth(
    iteration: FuzzIteration,
    config: Optional[HarnessConfig] = None,
    bugs: Iterable["BugSpec | str"] = (),
    budget: Optional[int] = None,
) -> Optional[Tuple[int, FieldDiff]]:
    """Ordinal and field of the first divergence found by the offline trace diff."""
    dut_trace, ref_trace = trace_run(iteration, config, bugs, budget)
    return first_divergence(dut_trace, ref_trace)
