"""Campaign configuration models."""

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..validation import ConfigurationError, ValidationError

DEFAULT_MODULE_WEIGHTS: Dict[str, int] = {
    "frontend": 0,
    "lsu": 0,
    "fpu": 0,
    "muldiv": 0,
    "csrfile": 0,
    "seqdet": 0,
}

MAX_WEIGHT_SHIFT = 8


class CorpusPolicy(str, Enum):
    """Corpus insertion and eviction policy."""

    COVERAGE = "coverage"
    FIFO = "fifo"


class MapperScheme(str, Enum):
    """Coverage index construction scheme."""

    LEGACY = "legacy"
    SEQUENTIAL = "sequential"


class ModeConfig(BaseModel):
    """Generation and mutation probabilities."""

    p_mutation: float = Field(default=7 / 16, ge=0, le=1, description="Probability of mutation mode")
    p_gen: float = Field(default=3 / 16, ge=0, le=1, description="Per-block regeneration probability")
    p_del: float = Field(default=11 / 16, ge=0, le=1, description="Per-block deletion probability")
    p_retain: float = Field(default=2 / 16, ge=0, le=1, description="Per-block retention probability")
    p_seed_prioritize: float = Field(
        default=3 / 4, ge=0, le=1, description="Probability of picking the best-scoring seed"
    )
    p_data_region: float = Field(
        default=3 / 4, ge=0, le=1, description="Probability that a memory read targets the data region"
    )
    p_misaligned: float = Field(
        default=1 / 64, ge=0, le=1, description="Probability of a deliberately misaligned load/store"
    )
    p_dynamic_rm: float = Field(
        default=1 / 2, ge=0, le=1, description="Probability that an FP op uses the dynamic rounding mode"
    )
    p_invalid_frm: float = Field(
        default=1 / 16, ge=0, le=1, description="Probability that an frm setup writes a reserved mode"
    )
    instructions_per_iteration: int = Field(
        default=4000, ge=1, description="Target instruction count of a generated iteration"
    )
    jump_range: Optional[int] = Field(
        default=8, ge=1, description="Max blocks a generated branch may span; null is unconstrained"
    )
    lfsr_width: int = Field(default=32, ge=3, le=64, description="Width of generation LFSRs")
    block_align: int = Field(
        default=4, ge=4, le=64, description="Block base alignment in bytes, a power of two"
    )

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "p_mutation": 0.4375,
                "p_gen": 0.1875,
                "p_del": 0.6875,
                "p_retain": 0.125,
                "p_seed_prioritize": 0.75,
                "p_data_region": 0.75,
                "instructions_per_iteration": 4000,
                "jump_range": 8,
                "block_align": 4,
            }
        }
    )

    @model_validator(mode="after")
    def check_op_distribution(self) -> "ModeConfig":
        """Mutation-op probabilities must form a distribution."""
        total = self.p_gen + self.p_del + self.p_retain
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"p_gen + p_del + p_retain must equal 1 (got {total:.6f})")
        return self

    @field_validator("block_align")
    @classmethod
    def check_block_align(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"block_align must be a power of two (got {v})")
        return v

    def __str__(self) -> str:
        jr = "inf" if self.jump_range is None else self.jump_range
        return (
            f"ModeConfig(p_mutation={self.p_mutation:.4f}, "
            f"ops={self.p_gen:.4f}/{self.p_del:.4f}/{self.p_retain:.4f}, jump_range={jr})"
        )


class CorpusConfig(BaseModel):
    """Corpus capacity and scheduling policy."""

    capacity: int = Field(default=256, ge=1, description="Maximum resident seeds")
    policy: CorpusPolicy = Field(default=CorpusPolicy.COVERAGE, description="coverage or fifo")
    snapshot_every: int = Field(
        default=0, ge=0, description="Persist the corpus every N iterations (0: only at the end)"
    )

    model_config = ConfigDict(
        json_schema_extra={"example": {"capacity": 256, "policy": "coverage", "snapshot_every": 500}}
    )


class CoverageConfig(BaseModel):
    """Instrumentation settings for the DUT shadow netlist."""

    scheme: MapperScheme = Field(default=MapperScheme.SEQUENTIAL, description="legacy or sequential")
    max_state_size: int = Field(default=14, ge=1, le=24, description="Bit width of coverage indices")
    modules: Dict[str, int] = Field(
        default_factory=lambda: dict(DEFAULT_MODULE_WEIGHTS),
        description="Instrumented modules and their N_cov weight shifts",
    )
    netlist_path: Optional[str] = Field(
        default=None, description="Netlist IR file; the bundled core netlist when null"
    )

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "scheme": "sequential",
                "max_state_size": 14,
                "modules": {"fpu": 1, "lsu": 0, "seqdet": 2},
            }
        }
    )

    @field_validator("modules")
    @classmethod
    def validate_weight_shifts(cls, v: Dict[str, int]) -> Dict[str, int]:
        """Weight shifts must stay within the supported bound."""
        for module, shift in v.items():
            if abs(shift) > MAX_WEIGHT_SHIFT:
                raise ValueError(f"weight shift of {module} must be within +-{MAX_WEIGHT_SHIFT}")
        return v


class HarnessConfig(BaseModel):
    """Lockstep harness and memory layout settings."""

    code_base: int = Field(default=0x1000_0000, ge=0, description="Instruction segment base address")
    code_size: int = Field(default=0x4_0000, gt=0, description="Instruction segment size in bytes")
    data_base: int = Field(default=0x2000_0000, ge=0, description="Data segment base address")
    data_size: int = Field(default=0x2000, gt=0, description="Data segment size in bytes")
    loop_ceiling: Optional[int] = Field(
        default=64, ge=1, description="Per-branch taken-count ceiling; null disables the guard"
    )
    budget_factor: int = Field(
        default=16, ge=1, description="Step budget as a multiple of the iteration instruction count"
    )
    bugs: List[str] = Field(default_factory=list, description="Bug catalog ids injected into the DUT")
    disabled_extensions: List[str] = Field(
        default_factory=list, description="Categories the DUT and reference treat as disabled"
    )
    halt_on_first_mismatch: bool = Field(
        default=False, description="Stop the campaign at the first mismatch"
    )

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "code_base": 268435456,
                "data_base": 536870912,
                "loop_ceiling": 64,
                "budget_factor": 16,
                "bugs": ["C1"],
            }
        }
    )

    @model_validator(mode="after")
    def check_segments(self) -> "HarnessConfig":
        """Segments must be disjoint, aligned, and addressable by lui/addi."""
        code_end = self.code_base + self.code_size
        data_end = self.data_base + self.data_size
        if self.code_base < data_end and self.data_base < code_end:
            raise ValueError("code and data segments overlap")
        if max(code_end, data_end) > 0x7FFF_F000:
            raise ValueError("segments must lie below 0x7ffff000")
        if self.code_base % 16 or self.data_base % 16:
            raise ValueError("segment bases must be 16-byte aligned")
        return self


class HybridConfig(BaseModel):
    """Two-stage hybrid exploration settings."""

    enabled: bool = Field(default=False, description="Run benchmark-interval seeding before fuzzing")
    interval_len: int = Field(default=1000, ge=1, description="Retired instructions per interval")
    k: int = Field(default=8, ge=1, description="Number of clusters over all bundled programs")
    benchmarks: List[str] = Field(
        default_factory=list, description="Bundled benchmark names; all when empty"
    )
    benchmark_scale: float = Field(default=1.0, gt=0, description="Scales benchmark input sizes")
    mark_threshold: int = Field(default=0, ge=0, description="Mark intervals whose gain exceeds this")
    max_budget_fraction: float = Field(
        default=0.01, gt=0, le=1, description="Stage-1 budget bound as a fraction of benchmark length"
    )
    stage2_window: int = Field(default=4, ge=1, description="Variants per stage-2 feedback window")
    plateau_windows: int = Field(
        default=5, ge=1, description="Consecutive low-gain windows that end stage 2"
    )
    plateau_threshold: int = Field(
        default=1, ge=0, description="Window gain below this counts as a plateau window"
    )
    max_variants: int = Field(default=200, ge=1, description="Hard cap on stage-2 variants per interval")

    model_config = ConfigDict(
        json_schema_extra={"example": {"enabled": True, "interval_len": 1000, "k": 8}}
    )


class BudgetConfig(BaseModel):
    """Campaign stopping budgets; the first one reached ends the campaign."""

    iterations: int = Field(default=100, ge=0, description="Fuzz iterations per shard")
    instructions: Optional[int] = Field(
        default=None, ge=0, description="Executed-instruction budget per shard"
    )
    wall_time_s: Optional[float] = Field(default=None, gt=0, description="Wall-clock budget in seconds")

    model_config = ConfigDict(json_schema_extra={"example": {"iterations": 5000}})


class CampaignConfig(BaseModel):
    """Everything a reproducible campaign needs."""

    mode: ModeConfig = Field(default_factory=ModeConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    coverage: CoverageConfig = Field(default_factory=CoverageConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)
    hybrid: HybridConfig = Field(default_factory=HybridConfig)
    budget: BudgetConfig = Field(default_factory=BudgetConfig)
    categories: List[str] = Field(
        default_factory=lambda: ["I", "M", "F", "A", "ZiCsr"],
        description="Enabled instruction library categories",
    )
    master_seed: int = Field(default=1, ge=0, description="Seed all component streams derive from")
    shards: int = Field(default=1, ge=1, description="Independent shards (processes)")
    output_dir: str = Field(default="runs/default", description="Artifact directory")
    log_level: str = Field(default="INFO", description="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    log_format: str = Field(default="json", description="json or console")

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "master_seed": 42,
                "shards": 2,
                "budget": {"iterations": 1000},
                "corpus": {"policy": "coverage"},
                "hybrid": {"enabled": True},
            }
        },
    )

    @field_validator("categories")
    @classmethod
    def validate_categories(cls, v: List[str]) -> List[str]:
        """Only known ISA subsets may be enabled."""
        known = {"I", "M", "F", "A", "ZiCsr"}
        unknown = [c for c in v if c not in known]
        if unknown:
            raise ValueError(f"unknown categories {unknown}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Log level must be a standard logging level."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"invalid log level {v}")
        return level

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Log format is json or console."""
        if v not in {"json", "console"}:
            raise ValueError("log_format must be json or console")
        return v

    @classmethod
    def from_mapping(cls, document: Dict[str, Any]) -> "CampaignConfig":
        """Validate a parsed config document.

        Raises:
            ValidationError: Listing every invalid field, dotted (``mode.p_gen``)
        """
        try:
            return cls.model_validate(document)
        except pydantic.ValidationError as e:
            fields = [".".join(str(p) for p in error["loc"]) or "<root>" for error in e.errors()]
            raise ValidationError(
                f"invalid campaign config: {len(fields)} field(s) rejected",
                fields=fields,
                cause=e,
            ) from e

    @classmethod
    def load(cls, path: Path | str) -> "CampaignConfig":
        """Read and validate a JSON campaign file.

        Raises:
            ConfigurationError: If the file cannot be read or is not a JSON object
            ValidationError: Listing every invalid field
        """
        target = Path(path)
        try:
            document = json.loads(target.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(
                f"cannot read config {target}: {e}", config_key=str(target), cause=e
            ) from e
        if not isinstance(document, dict):
            raise ConfigurationError(
                f"config {target} must hold a JSON object", config_key=str(target)
            )
        return cls.from_mapping(document)

    def config_hash(self) -> str:
        """Hash of everything that affects results; output location and logging excluded."""
        payload = self.model_dump(mode="json", exclude={"output_dir", "log_level", "log_format"})
        encoded = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()

    def __str__(self) -> str:
        return (
            f"CampaignConfig(seed={self.master_seed}, shards={self.shards}, "
            f"iterations={self.budget.iterations}, policy={self.corpus.policy.value})"
        )
