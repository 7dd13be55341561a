"""The campaign loop: hybrid seeding, then generate or mutate, run in lockstep, feed back."""

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import structlog

from ..corpus import Corpus, InsertAction, Seed, SeedOrigin, baseline_seeds, save_corpus
from ..coverage import CoverageMap, Instrumentation
from ..genmut import FuzzIteration, MemoryPolicy, Mode, choose_mode, generate_iteration
from ..genmut import mutate_iteration, save_iteration
from ..harness import run_iteration
from ..hybrid import Stage1Result, Stage2Result, bundled_benchmarks, run_stage1, run_stage2
from ..isa import InstructionLibrary, default_library
from ..models import CampaignConfig, CampaignStats, IterationRecord, Mismatch, RunReport
from ..models import Outcome, TimingInfo
from .reports import ReportFormat, emit_report, write_timing
from .settings import effective_config_json
from .streams import Streams

logger = structlog.get_logger(__name__)

COVERAGE_MAP = "coverage.covmap"
CORPUS_DIR = "corpus"
MISMATCH_DIR = "mismatches"
INTERVALS_JSON = "intervals.json"
CONFIG_JSON = "config.json"


def shard_dir(output_dir: Path | str, shard: int) -> Path:
    return Path(output_dir) / f"shard-{shard:02d}"


@dataclass
class CampaignResult:
    """Everything one shard produced, in memory and on disk."""

    stats: CampaignStats
    timing: TimingInfo
    corpus: Corpus
    covmap: CoverageMap
    directory: Path
    stage1: Optional[Stage1Result] = None
    stage2: Optional[Stage2Result] = None
    artifacts: Dict[str, Path] = field(default_factory=dict)

    @property
    def mismatches(self) -> List[Mismatch]:
        return self.stats.mismatches

    def __str__(self) -> str:
        return f"CampaignResult({self.stats}, dir={self.directory})"


class Campaign:
    """One shard of a campaign.

    The loop stops at the first exhausted budget. Budgets are checked before an iteration
    starts, so every stats record belongs to an iteration that ran to its end.
    """

    def __init__(
        self,
        config: CampaignConfig,
        shard: int = 0,
        output_dir: Optional[Path | str] = None,
    ):
        self.config = config
        self.shard = shard
        self.directory = shard_dir(output_dir or config.output_dir, shard)
        self.streams = Streams.derive(config.master_seed, shard, config.mode.lfsr_width)
        self.harness = config.harness
        self.library: InstructionLibrary = default_library().with_enabled(config.categories)
        self.policy = MemoryPolicy.from_configs(config.mode, config.harness)
        self.instrumentation = Instrumentation.build(config.coverage, rng=self.streams.coverage)
        self.covmap = self.instrumentation.new_map()
        self.corpus = Corpus(
            config.corpus.capacity,
            config.corpus.policy,
            baseline_seeds(config.harness, self.library),
        )
        self.records: List[IterationRecord] = []
        self.mismatches: List[Mismatch] = []
        self.stage1: Optional[Stage1Result] = None
        self.stage2: Optional[Stage2Result] = None
        self.hybrid_point_keys: List[Tuple[str, int]] = []
        self.hybrid_instructions = 0
        self.instructions = 0

    def __str__(self) -> str:
        return f"Campaign(shard={self.shard}, {self.config})"

    def run_hybrid(self) -> None:
        """Seed the corpus from benchmark intervals, then refine the marked ones."""
        hybrid = self.config.hybrid
        benchmarks = bundled_benchmarks(hybrid.benchmarks, self.harness, hybrid.benchmark_scale)
        self.stage1 = run_stage1(
            benchmarks,
            hybrid,
            self.harness,
            self.instrumentation,
            self.covmap,
            self.corpus,
            random_state=self.streams.clustering,
        )
        self.stage2 = run_stage2(
            self.stage1.intervals,
            benchmarks,
            hybrid,
            self.harness,
            self.streams.refinement,
            self.instrumentation,
            self.covmap,
            self.corpus,
        )
        self.hybrid_point_keys = sorted(self.covmap.points())
        self.hybrid_instructions = self.stage1.instructions + self.stage2.instructions
        self.instructions = self.hybrid_instructions

    def _exhausted(self, ordinal: int, started: float) -> Optional[str]:
        budget = self.config.budget
        if ordinal >= budget.iterations:
            return "iterations"
        if budget.instructions is not None and self.instructions >= budget.instructions:
            return "instructions"
        if budget.wall_time_s is not None and time.monotonic() - started >= budget.wall_time_s:
            return "wall_time"
        return None

    def _next_iteration(self) -> Tuple[Mode, FuzzIteration, Optional[Seed]]:
        mode_cfg = self.config.mode
        mode = choose_mode(mode_cfg, self.streams.mode.random())
        if not len(self.corpus) and not self.corpus.baseline:
            mode = Mode.DIRECT
        parent: Optional[Seed] = None
        if mode is Mode.MUTATION:
            parent = self.corpus.select_seed(mode_cfg.p_seed_prioritize, self.streams.selection)
            iteration = mutate_iteration(
                parent,
                mode_cfg,
                float(parent.cov_increment),
                self.streams.mutation,
                self.library,
                self.policy,
            )
        else:
            iteration = generate_iteration(
                mode_cfg, self.library, self.streams.generation, self.policy
            )
        iteration = replace(iteration, data_seed=self.streams.data.next_bits(32) | 1)
        return mode, iteration, parent

    def _update_corpus(
        self, ordinal: int, mode: Mode, iteration: FuzzIteration, parent: Optional[Seed], gain: int
    ) -> str:
        """Credit the run to its parent, then offer the iteration as a seed.

        A mutation run is the parent's most recent measurement, so a resident parent's
        score becomes the run's gain. The action reported is the newcomer's, or
        ``updated`` when it was rejected but the parent was rescored.
        """
        updated = False
        if parent is not None and parent.seed_id in self.corpus:
            self.corpus.update_seed_score(parent.seed_id, gain)
            updated = True
        origin = SeedOrigin.MUTATION if mode is Mode.MUTATION else SeedOrigin.DIRECT
        seed = self.corpus.new_seed(
            iteration, origin, parent.seed_id if parent else None, created_at=ordinal
        )
        result = self.corpus.insert_seed(seed, gain)
        if result.action is InsertAction.REJECTED and updated:
            return "updated"
        if result.victim is not None:
            logger.debug("seed_evicted", seed_id=result.victim.seed_id, by=seed.seed_id)
        return result.action.value

    def _record_mismatch(self, ordinal: int, iteration: FuzzIteration, report: RunReport) -> None:
        assert report.mismatch is not None
        name = f"iter-{ordinal:06d}"
        directory = self.directory / MISMATCH_DIR
        save_iteration(iteration, directory / f"{name}.bin")
        # Paths in stats stay relative to the shard directory.
        mismatch = report.mismatch.model_copy(
            update={"snapshot_path": f"{MISMATCH_DIR}/{name}.snap.json.gz"}
        )
        (directory / f"{name}.json").write_text(
            json.dumps(mismatch.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        self.mismatches.append(mismatch)

    def run_iteration(self, ordinal: int) -> IterationRecord:
        mode, iteration, parent = self._next_iteration()
        report = run_iteration(
            iteration,
            self.harness,
            self.instrumentation,
            self.covmap,
            snapshot_dir=self.directory / MISMATCH_DIR,
            name=f"iter-{ordinal:06d}",
        )
        if report.mismatch is not None:
            self._record_mismatch(ordinal, iteration, report)
        action = self._update_corpus(ordinal, mode, iteration, parent, report.coverage_delta)
        self.instructions += report.executed_count
        record = IterationRecord(
            ordinal=ordinal,
            mode=mode.value,
            executed=report.executed_count,
            fuzz_instructions=report.fuzzing_instruction_count,
            prevalence=report.prevalence,
            new_points=report.coverage_delta,
            new_point_keys=report.new_point_keys,
            cumulative_coverage=self.covmap.total,
            cumulative_instructions=self.instructions,
            corpus_action=action,
            outcome=report.outcome,
        )
        self.records.append(record)
        logger.info(
            "iteration_completed",
            ordinal=ordinal,
            mode=mode.value,
            outcome=report.outcome.value,
            executed=report.executed_count,
            prevalence=round(report.prevalence, 4),
            new_points=report.coverage_delta,
            coverage=self.covmap.total,
            corpus_action=action,
        )
        return record

    def stats(self) -> CampaignStats:
        return CampaignStats(
            config_hash=self.config.config_hash(),
            shards=[self.shard],
            records=self.records,
            mismatches=self.mismatches,
            final_coverage=self.covmap.total,
            corpus_size=len(self.corpus),
            hybrid_point_keys=self.hybrid_point_keys,
            hybrid_instructions=self.hybrid_instructions,
        )

    def write_artifacts(self, stats: CampaignStats, timing: TimingInfo) -> Dict[str, Path]:
        directory = self.directory
        directory.mkdir(parents=True, exist_ok=True)
        artifacts = {
            "config": directory / CONFIG_JSON,
            "stats_json": emit_report(stats, directory / "stats.json", ReportFormat.JSON),
            "stats_csv": emit_report(stats, directory / "stats.csv", ReportFormat.CSV),
            "coverage": self.covmap.dump(directory / COVERAGE_MAP),
            "corpus": save_corpus(self.corpus, directory / CORPUS_DIR).parent,
            "timing": write_timing(timing, directory),
        }
        artifacts["config"].write_text(effective_config_json(self.config) + "\n", encoding="utf-8")
        if self.stage1 is not None:
            artifacts["intervals"] = self.stage1.report().write_json(directory / INTERVALS_JSON)
        return artifacts

    def run(self) -> CampaignResult:
        started = time.monotonic()
        structlog.contextvars.bind_contextvars(shard=self.shard)
        logger.info(
            "campaign_started",
            config_hash=self.config.config_hash(),
            master_seed=self.config.master_seed,
            directory=str(self.directory),
        )
        if self.config.hybrid.enabled:
            self.run_hybrid()

        ordinal = 0
        while True:
            reason = self._exhausted(ordinal, started)
            if reason is not None:
                logger.info("budget_exhausted", budget=reason, iterations=ordinal)
                break
            record = self.run_iteration(ordinal)
            ordinal += 1
            every = self.config.corpus.snapshot_every
            if every and ordinal % every == 0:
                save_corpus(self.corpus, self.directory / CORPUS_DIR)
            if record.outcome is Outcome.MISMATCH and self.harness.halt_on_first_mismatch:
                logger.warning("campaign_halted", ordinal=record.ordinal)
                break

        stats = self.stats()
        timing = TimingInfo(
            wall_seconds=time.monotonic() - started,
            iterations=len(self.records),
            executed_instructions=self.instructions,
        )
        artifacts = self.write_artifacts(stats, timing)
        logger.info(
            "campaign_completed",
            iterations=len(self.records),
            coverage=stats.final_coverage,
            mismatches=len(stats.mismatches),
            corpus_size=stats.corpus_size,
            fuzzing_speed_hz=round(timing.fuzzing_speed_hz, 3),
            instructions_per_second=round(timing.instructions_per_second, 1),
        )
        return CampaignResult(
            stats=stats,
            timing=timing,
            corpus=self.corpus,
            covmap=self.covmap,
            directory=self.directory,
            stage1=self.stage1,
            stage2=self.stage2,
            artifacts=artifacts,
        )


def run_campaign(
    config: CampaignConfig, shard: int = 0, output_dir: Optional[Path | str] = None
) -> CampaignResult:
    """Run one shard of ``config`` and write its artifacts under ``output_dir``."""
    return Campaign(config, shard, output_dir).run()


__all__ = [
    "COVERAGE_MAP",
    "CORPUS_DIR",
    "Campaign",
    "CampaignResult",
    "INTERVALS_JSON",
    "MISMATCH_DIR",
    "run_campaign",
    "shard_dir",
]
