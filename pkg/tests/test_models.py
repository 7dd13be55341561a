"""Tests for configuration and report models."""

import pydantic
import pytest

from rvloopfuzz.models import (
    MAX_WEIGHT_SHIFT,
    CampaignConfig,
    CampaignStats,
    CorpusPolicy,
    CoverageConfig,
    HarnessConfig,
    IterationRecord,
    Mismatch,
    ModeConfig,
    Outcome,
    RunReport,
    TimingInfo,
    compute_prevalence,
)


def record(ordinal, cumulative):
    return IterationRecord(
        ordinal=ordinal,
        mode="direct",
        executed=10,
        fuzz_instructions=9,
        prevalence=0.9,
        new_points=0,
        cumulative_coverage=cumulative,
        cumulative_instructions=10 * (ordinal + 1),
        corpus_action="rejected",
        outcome=Outcome.COMPLETED,
    )


MISMATCH = Mismatch(ordinal=0, pc=0x1000_0000, word=0x13, field="pc", dut_value="0", ref_value="4")


class TestModeConfig:
    """Test generation and mutation settings."""

    def test_defaults(self):
        """Default op probabilities are 3/16, 11/16 and 2/16."""
        mode = ModeConfig()
        assert (mode.p_gen, mode.p_del, mode.p_retain) == (3 / 16, 11 / 16, 2 / 16)
        assert mode.p_mutation == 7 / 16

    def test_ops_must_sum_to_one(self):
        """Mutation-op probabilities form a distribution."""
        with pytest.raises(pydantic.ValidationError, match="must equal 1"):
            ModeConfig(p_gen=0.5, p_del=0.5, p_retain=0.5)

    def test_probability_range(self):
        """Probabilities stay in [0, 1]."""
        with pytest.raises(pydantic.ValidationError):
            ModeConfig(p_mutation=1.5)

    def test_block_align(self):
        """Block alignment defaults to one instruction and must be a power of two."""
        assert ModeConfig().block_align == 4
        assert ModeConfig(block_align=16).block_align == 16
        with pytest.raises(pydantic.ValidationError, match="power of two"):
            ModeConfig(block_align=12)
        with pytest.raises(pydantic.ValidationError):
            ModeConfig(block_align=2)


class TestHarnessConfig:
    """Test memory layout checks."""

    def test_overlapping_segments(self):
        """Code and data segments may not overlap."""
        with pytest.raises(pydantic.ValidationError, match="overlap"):
            HarnessConfig(code_base=0x2000_0000, data_base=0x2000_0100)

    def test_unaligned_base(self):
        """Segment bases are 16-byte aligned."""
        with pytest.raises(pydantic.ValidationError, match="aligned"):
            HarnessConfig(data_base=0x2000_0004)

    def test_out_of_reach(self):
        """Segments must be reachable by lui/addi."""
        with pytest.raises(pydantic.ValidationError, match="below"):
            HarnessConfig(data_base=0x7FFF_F000)


class TestCoverageConfig:
    """Test instrumentation settings."""

    def test_weight_shift_bound(self):
        """Weight shifts are bounded."""
        CoverageConfig(modules={"fpu": MAX_WEIGHT_SHIFT})
        with pytest.raises(pydantic.ValidationError):
            CoverageConfig(modules={"fpu": MAX_WEIGHT_SHIFT + 1})


class TestCampaignConfig:
    """Test the top-level campaign config."""

    def test_unknown_keys_rejected(self):
        """Typos in config files are errors."""
        with pytest.raises(pydantic.ValidationError):
            CampaignConfig.model_validate({"master_sed": 3})

    def test_unknown_category(self):
        """Only known ISA subsets may be enabled."""
        with pytest.raises(pydantic.ValidationError, match="unknown categories"):
            CampaignConfig(categories=["I", "V"])

    def test_log_level_normalized(self):
        """Log levels are upper-cased."""
        assert CampaignConfig(log_level="warning").log_level == "WARNING"

    def test_policy_from_string(self):
        """Corpus policy parses from its value."""
        config = CampaignConfig.model_validate({"corpus": {"policy": "fifo"}})
        assert config.corpus.policy is CorpusPolicy.FIFO

    def test_str(self):
        """Summary names seed, shards and policy."""
        assert "policy=coverage" in str(CampaignConfig(master_seed=5))


class TestRunReport:
    """Test the per-iteration execution report."""

    def test_prevalence(self):
        """Prevalence is fuzzing over executed instructions."""
        report = RunReport(executed_count=200, fuzzing_instruction_count=150)
        assert report.prevalence == pytest.approx(0.75)
        assert compute_prevalence(report) == pytest.approx(0.75)

    def test_prevalence_nothing_ran(self):
        """An empty run has prevalence zero."""
        assert RunReport().prevalence == 0.0

    def test_mismatch_requires_details(self):
        """A mismatch outcome without details is invalid."""
        with pytest.raises(pydantic.ValidationError):
            RunReport(outcome=Outcome.MISMATCH)

    def test_details_require_mismatch(self):
        """Mismatch details on a clean run are invalid."""
        with pytest.raises(pydantic.ValidationError):
            RunReport(outcome=Outcome.COMPLETED, mismatch=MISMATCH)

    def test_mismatch_report(self):
        """A complete mismatch report validates."""
        report = RunReport(outcome=Outcome.MISMATCH, mismatch=MISMATCH)
        assert "pc" in str(report.mismatch)


class TestCampaignStats:
    """Test campaign statistics."""

    def test_curves(self):
        """Curves follow the records."""
        stats = CampaignStats(config_hash="h", records=[record(0, 2), record(1, 5)])
        assert stats.coverage_curve == [2, 5]
        assert stats.instruction_curve == [(10, 2), (20, 5)]

    def test_coverage_never_decreases(self):
        """A decreasing cumulative coverage is rejected."""
        with pytest.raises(pydantic.ValidationError, match="decreased"):
            CampaignStats(config_hash="h", records=[record(0, 5), record(1, 4)])

    def test_hybrid_points(self):
        """Hybrid points count the stored keys."""
        stats = CampaignStats(config_hash="h", hybrid_point_keys=[("seqdet", 3), ("lsu", 0)])
        assert stats.hybrid_points == 2


class TestTimingInfo:
    """Test throughput figures."""

    def test_rates(self):
        """Rates divide by wall time."""
        timing = TimingInfo(wall_seconds=2.0, iterations=10, executed_instructions=5000)
        assert timing.fuzzing_speed_hz == 5.0
        assert timing.instructions_per_second == 2500.0

    def test_zero_wall_time(self):
        """No elapsed time gives zero rates."""
        timing = TimingInfo(wall_seconds=0, iterations=0, executed_instructions=0)
        assert timing.fuzzing_speed_hz == 0.0
