"""Execution and campaign report models."""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


class Outcome(str, Enum):
    """How a lockstep run ended."""

    COMPLETED = "completed"
    MISMATCH = "mismatch"
    BUDGET_EXHAUSTED = "budget_exhausted"
    ABANDONED = "abandoned"


class Mismatch(BaseModel):
    """First divergence between the DUT and the reference."""

    ordinal: int = Field(..., ge=0, description="Step ordinal of the diverging instruction")
    pc: int = Field(..., description="PC of the diverging instruction")
    word: int = Field(..., description="Instruction word at that PC")
    field: str = Field(..., description="Compared field that differs, e.g. pc, trap, x5, fflags")
    dut_value: str = Field(..., description="DUT value, rendered")
    ref_value: str = Field(..., description="Reference value, rendered")
    snapshot_path: Optional[str] = Field(default=None, description="DUT snapshot at the mismatch")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "ordinal": 117,
                "pc": 268436016,
                "word": 0x18B5F553,
                "field": "fflags",
                "dut_value": "0x18",
                "ref_value": "0x10",
            }
        }
    )

    def __str__(self) -> str:
        return (
            f"Mismatch(#{self.ordinal} pc={self.pc:#x} word={self.word:#010x} "
            f"{self.field}: dut={self.dut_value} ref={self.ref_value})"
        )


class RunReport(BaseModel):
    """Outcome of running one iteration in lockstep."""

    executed_count: int = Field(default=0, ge=0, description="Retired instructions plus handler cost")
    fuzzing_instruction_count: int = Field(
        default=0, ge=0, description="Retired instructions belonging to fuzz or benchmark code"
    )
    retired_count: int = Field(default=0, ge=0, description="Instructions retired by the DUT")
    steps: int = Field(default=0, ge=0, description="Lockstep steps taken, traps included")
    generated_count: int = Field(default=0, ge=0, description="Fuzz instructions in the image")
    distinct_executed: int = Field(
        default=0, ge=0, description="Distinct fuzz instruction addresses that retired"
    )
    coverage_delta: int = Field(default=0, ge=0, description="Newly covered points")
    new_point_keys: List[Tuple[str, int]] = Field(
        default_factory=list, description="(module, index) of every newly covered point"
    )
    outcome: Outcome = Field(default=Outcome.COMPLETED)
    mismatch: Optional[Mismatch] = Field(default=None)
    exceptions_handled: int = Field(default=0, ge=0)
    abandoned_cause: Optional[int] = Field(default=None, description="Trap cause that ended the run")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def prevalence(self) -> float:
        """Fuzzing instructions over executed instructions (0 when nothing ran)."""
        return compute_prevalence(self)

    @property
    def executed_fraction(self) -> float:
        """Fraction of generated fuzz instructions that retired at least once."""
        if self.generated_count == 0:
            return 0.0
        return self.distinct_executed / self.generated_count

    @model_validator(mode="after")
    def check_mismatch_outcome(self) -> "RunReport":
        """A mismatch outcome carries its mismatch and vice versa."""
        if (self.outcome is Outcome.MISMATCH) != (self.mismatch is not None):
            raise ValueError("mismatch details must accompany exactly the mismatch outcome")
        return self

    def __str__(self) -> str:
        return (
            f"RunReport({self.outcome.value}, executed={self.executed_count}, "
            f"prevalence={self.prevalence:.3f}, new={self.coverage_delta})"
        )


def compute_prevalence(report: RunReport) -> float:
    """Ratio of fuzzing instructions to executed instructions."""
    if report.executed_count == 0:
        return 0.0
    return report.fuzzing_instruction_count / report.executed_count


class IterationRecord(BaseModel):
    """One line of the campaign statistics stream."""

    ordinal: int = Field(..., ge=0)
    mode: str = Field(..., description="direct, mutation or hybrid")
    executed: int = Field(..., ge=0)
    fuzz_instructions: int = Field(..., ge=0)
    prevalence: float = Field(..., ge=0, le=1)
    new_points: int = Field(..., ge=0)
    new_point_keys: List[Tuple[str, int]] = Field(
        default_factory=list, description="(module, index) of every newly covered point"
    )
    cumulative_coverage: int = Field(..., ge=0)
    cumulative_instructions: int = Field(..., ge=0)
    corpus_action: str = Field(..., description="inserted, replaced, rejected or updated")
    outcome: Outcome

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "ordinal": 12,
                "mode": "mutation",
                "executed": 4213,
                "fuzz_instructions": 4101,
                "prevalence": 0.973,
                "new_points": 3,
                "cumulative_coverage": 811,
                "cumulative_instructions": 50211,
                "corpus_action": "updated",
                "outcome": "completed",
            }
        }
    )


class CampaignStats(BaseModel):
    """Deterministic per-shard (or merged) campaign statistics."""

    config_hash: str = Field(..., description="sha256 of the result-affecting configuration")
    shards: List[int] = Field(default_factory=lambda: [0])
    records: List[IterationRecord] = Field(default_factory=list)
    mismatches: List[Mismatch] = Field(default_factory=list)
    final_coverage: int = Field(default=0, ge=0)
    corpus_size: int = Field(default=0, ge=0)
    hybrid_point_keys: List[Tuple[str, int]] = Field(
        default_factory=list, description="(module, index) of points covered before fuzzing began"
    )
    hybrid_instructions: int = Field(
        default=0, ge=0, description="Instructions executed by the hybrid stages"
    )

    @model_validator(mode="after")
    def check_monotonic(self) -> "CampaignStats":
        """Cumulative coverage never decreases."""
        previous = 0
        for record in self.records:
            if record.cumulative_coverage < previous:
                raise ValueError(f"coverage decreased at iteration {record.ordinal}")
            previous = record.cumulative_coverage
        return self

    @property
    def hybrid_points(self) -> int:
        return len(self.hybrid_point_keys)

    @property
    def coverage_curve(self) -> List[int]:
        return [r.cumulative_coverage for r in self.records]

    @property
    def instruction_curve(self) -> List[Tuple[int, int]]:
        """(cumulative executed instructions, cumulative coverage) pairs."""
        return [(r.cumulative_instructions, r.cumulative_coverage) for r in self.records]

    def __str__(self) -> str:
        return (
            f"CampaignStats({len(self.records)} iterations, coverage={self.final_coverage}, "
            f"mismatches={len(self.mismatches)})"
        )


class TimingInfo(BaseModel):
    """Wall-clock throughput, kept apart from the deterministic statistics."""

    wall_seconds: float = Field(..., ge=0)
    iterations: int = Field(..., ge=0)
    executed_instructions: int = Field(..., ge=0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def fuzzing_speed_hz(self) -> float:
        return self.iterations / self.wall_seconds if self.wall_seconds else 0.0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def instructions_per_second(self) -> float:
        return self.executed_instructions / self.wall_seconds if self.wall_seconds else 0.0
