"""Stage 1: seed the corpus with representative benchmark intervals."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import structlog

from ..corpus import Corpus, Seed, SeedOrigin
from ..coverage import CoverageMap, Instrumentation, PointKey
from ..genmut import FuzzIteration
from ..harness import ArchState, Execution
from ..isa import Instruction
from ..models import HarnessConfig, HybridConfig, Outcome
from ..serialization import JsonSerializableMixin
from ..validation import ConfigurationError
from .bbv import Bbv, compute_bbvs
from .benchmarks import Benchmark
from .cluster import ClusterResult, cluster_bbvs
from .context import (
    BenchmarkTrace,
    ReplayCursor,
    benchmark_iteration,
    enabled_extensions,
    synthesize_init,
    trace_benchmark,
)

logger = structlog.get_logger(__name__)


@dataclass
class RepInterval:
    """A representative interval and what running it on the DUT achieved."""

    benchmark: str
    start: int
    end: int
    entry_pc: int
    state: ArchState
    memory_overlay: Dict[int, int]
    weight: float
    prologue_len: int = 0
    marked: bool = False
    cov_gain: int = 0
    executed: int = 0
    seed_id: Optional[int] = None
    new_points: List[PointKey] = field(default_factory=list)
    outcome: Optional[Outcome] = None

    @property
    def budget(self) -> int:
        """Steps the seed runs: the prologue, its jump and the interval."""
        return self.prologue_len + 1 + (self.end - self.start)

    def __str__(self) -> str:
        mark = " marked" if self.marked else ""
        return f"RepInterval({self.benchmark}[{self.start}:{self.end}], gain={self.cov_gain}{mark})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "benchmark": self.benchmark,
            "start": self.start,
            "end": self.end,
            "entry_pc": self.entry_pc,
            "weight": self.weight,
            "prologue_len": self.prologue_len,
            "marked": self.marked,
            "cov_gain": self.cov_gain,
            "executed": self.executed,
            "seed_id": self.seed_id,
            "new_points": [list(point) for point in self.new_points],
            "outcome": self.outcome.value if self.outcome else None,
        }


@dataclass
class IntervalReport(JsonSerializableMixin):
    """Per-interval gains and marks of a stage-1 run."""

    intervals: List[RepInterval]
    budget: int
    total_instructions: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "budget": self.budget,
            "total_instructions": self.total_instructions,
            "budget_fraction": (
                self.budget / self.total_instructions if self.total_instructions else 0.0
            ),
            "intervals": [interval.to_dict() for interval in self.intervals],
        }


@dataclass
class Stage1Result:
    intervals: List[RepInterval]
    seeds: List[Seed]
    budget: int
    total_instructions: int
    clusters: Optional[ClusterResult] = None

    @property
    def marked(self) -> List[RepInterval]:
        return [interval for interval in self.intervals if interval.marked]

    @property
    def total_gain(self) -> int:
        return sum(interval.cov_gain for interval in self.intervals)

    @property
    def instructions(self) -> int:
        """Instructions the DUT executed across all interval seeds."""
        return sum(interval.executed for interval in self.intervals)

    def report(self) -> IntervalReport:
        return IntervalReport(self.intervals, self.budget, self.total_instructions)

    def __str__(self) -> str:
        return (
            f"Stage1Result(intervals={len(self.intervals)}, marked={len(self.marked)}, "
            f"budget={self.budget}/{self.total_instructions})"
        )


def runnable(benchmark: Benchmark, harness: HarnessConfig) -> bool:
    """True when no instruction of the benchmark belongs to a disabled category."""
    disabled = set(harness.disabled_extensions)
    return not any(i.template.category.value in disabled for i in benchmark.program)


def extract_intervals(
    benchmarks: Sequence[Benchmark],
    config: HybridConfig,
    harness: HarnessConfig,
    random_state: int = 0,
) -> Tuple[List[RepInterval], int, Optional[ClusterResult]]:
    """Trace, cluster and capture the representative intervals of ``benchmarks``.

    Returns:
        The intervals in (benchmark, start) order, the suite's total steps, and the clusters

    Raises:
        ConfigurationError: If the stage-1 budget exceeds ``max_budget_fraction`` of the suite
    """
    traces: Dict[str, BenchmarkTrace] = {}
    bbvs: List[Bbv] = []
    for benchmark in benchmarks:
        trace = trace_benchmark(benchmark, harness)
        traces[benchmark.name] = trace
        bbvs += compute_bbvs(trace.pcs, config.interval_len, trace.leaders, benchmark.name)
    total = sum(trace.length for trace in traces.values())
    if not bbvs:
        logger.warning("stage1_no_intervals", benchmarks=[b.name for b in benchmarks])
        return [], total, None

    clusters = cluster_bbvs(bbvs, min(config.k, len(bbvs)), random_state)
    chosen = sorted(
        zip((bbvs[index] for index in clusters.representatives), clusters.weights),
        key=lambda pair: (pair[0].program, pair[0].start),
    )

    by_name = {b.name: b for b in benchmarks}
    cursors: Dict[str, ReplayCursor] = {}
    enabled = enabled_extensions(harness)
    intervals: List[RepInterval] = []
    for bbv, weight in chosen:
        benchmark, trace = by_name[bbv.program], traces[bbv.program]
        if bbv.program not in cursors:
            cursors[bbv.program] = ReplayCursor(trace.iteration, harness)
        cursor = cursors[bbv.program]
        cursor.advance(bbv.start)
        # Intervals opening on a trapped step start at the next benchmark instruction.
        while cursor.lane.pc not in trace.layout and not cursor.lane.finished:
            cursor.lane.step()
        if cursor.lane.finished:
            continue
        context = cursor.capture()
        prologue = synthesize_init(context.state, enabled)
        intervals.append(
            RepInterval(
                benchmark=bbv.program,
                start=context.ordinal,
                end=max(context.ordinal, bbv.end),
                entry_pc=trace.layout[cursor.lane.pc],
                state=context.state,
                memory_overlay=context.memory_overlay(harness.data_base, benchmark.data_seed),
                weight=weight,
                prologue_len=len(prologue),
            )
        )

    budget = sum(interval.budget for interval in intervals)
    if budget > config.max_budget_fraction * total:
        raise ConfigurationError(
            f"stage-1 budget {budget} exceeds {config.max_budget_fraction:.2%} of {total} steps",
            config_key="hybrid.max_budget_fraction",
        )
    logger.info(
        "stage1_intervals_extracted",
        vectors=len(bbvs),
        intervals=len(intervals),
        budget=budget,
        total_instructions=total,
    )
    return intervals, total, clusters


def interval_seed_iteration(
    interval: RepInterval,
    benchmark: Benchmark,
    harness: HarnessConfig,
    program: Optional[Sequence[Instruction]] = None,
) -> FuzzIteration:
    """Prologue plus the benchmark laid out to enter at the interval's first instruction."""
    prologue = synthesize_init(interval.state, enabled_extensions(harness))
    return benchmark_iteration(
        benchmark,
        harness,
        prologue=prologue,
        entry_pc=interval.entry_pc,
        memory_overlay=interval.memory_overlay,
        program=program,
    )


def run_interval(
    iteration: FuzzIteration,
    budget: int,
    harness: HarnessConfig,
    instrumentation: Optional[Instrumentation],
    covmap: Optional[CoverageMap],
) -> Execution:
    """Run an interval seed in lockstep without the loop guard."""
    config = harness.model_copy(update={"loop_ceiling": None})
    execution = Execution(iteration, config, instrumentation, covmap, config.bugs, budget)
    execution.run()
    if execution.outcome is Outcome.MISMATCH:
        record, diff = execution.mismatch  # type: ignore[misc]
        logger.warning(
            "interval_mismatch",
            ordinal=record.ordinal,
            pc=f"{record.pc:#x}",
            field=diff.field,
            dut=diff.dut_value,
            ref=diff.ref_value,
        )
    return execution


def run_stage1(
    benchmarks: Sequence[Benchmark],
    config: HybridConfig,
    harness: Optional[HarnessConfig] = None,
    instrumentation: Optional[Instrumentation] = None,
    covmap: Optional[CoverageMap] = None,
    corpus: Optional[Corpus] = None,
    random_state: int = 0,
) -> Stage1Result:
    """Extract representative intervals, run each as a seed and mark the gainful ones.

    Every interval seed is offered to ``corpus`` with its coverage gain as score. An
    interval is marked when its gain exceeds ``config.mark_threshold``.

    Raises:
        ConfigurationError: If the stage-1 budget bound is violated
    """
    harness = harness or HarnessConfig()
    instrumentation = instrumentation or Instrumentation.default()
    covmap = covmap if covmap is not None else instrumentation.new_map()

    usable = [b for b in benchmarks if runnable(b, harness)]
    skipped = [b.name for b in benchmarks if not runnable(b, harness)]
    if skipped:
        logger.info("benchmarks_skipped", names=skipped, disabled=harness.disabled_extensions)

    intervals, total, clusters = extract_intervals(usable, config, harness, random_state)
    by_name = {b.name: b for b in usable}
    seeds: List[Seed] = []
    for interval in intervals:
        iteration = interval_seed_iteration(interval, by_name[interval.benchmark], harness)
        execution = run_interval(iteration, interval.budget, harness, instrumentation, covmap)
        interval.new_points = list(execution.dut.new_points)
        interval.cov_gain = len(interval.new_points)
        interval.outcome = execution.outcome
        interval.executed = execution.dut_lane.executed_count
        interval.marked = interval.cov_gain > config.mark_threshold
        if corpus is not None:
            seed = corpus.new_seed(iteration, SeedOrigin.HYBRID)
            interval.seed_id = seed.seed_id
            corpus.insert_seed(seed, interval.cov_gain)
            seeds.append(seed)
        logger.info(
            "stage1_interval_run",
            benchmark=interval.benchmark,
            start=interval.start,
            weight=round(interval.weight, 4),
            gain=interval.cov_gain,
            marked=interval.marked,
            outcome=interval.outcome.value if interval.outcome else None,
        )

    budget = sum(interval.budget for interval in intervals)
    logger.info(
        "stage1_completed",
        intervals=len(intervals),
        marked=sum(interval.marked for interval in intervals),
        budget=budget,
        total_instructions=total,
    )
    return Stage1Result(intervals, seeds, budget, total, clusters)


__all__ = [
    "IntervalReport",
    "RepInterval",
    "Stage1Result",
    "extract_intervals",
    "interval_seed_iteration",
    "run_interval",
    "run_stage1",
    "runnable",
]
