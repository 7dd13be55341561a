"""Configuration and report models."""

from .config import (
    DEFAULT_MODULE_WEIGHTS,
    MAX_WEIGHT_SHIFT,
    BudgetConfig,
    CampaignConfig,
    CorpusConfig,
    CorpusPolicy,
    CoverageConfig,
    HarnessConfig,
    HybridConfig,
    MapperScheme,
    ModeConfig,
)
from .report import (
    CampaignStats,
    IterationRecord,
    Mismatch,
    Outcome,
    RunReport,
    TimingInfo,
    compute_prevalence,
)

__all__ = [
    # Configuration models
    "DEFAULT_MODULE_WEIGHTS",
    "MAX_WEIGHT_SHIFT",
    "BudgetConfig",
    "CampaignConfig",
    "CorpusConfig",
    "CorpusPolicy",
    "CoverageConfig",
    "HarnessConfig",
    "HybridConfig",
    "MapperScheme",
    "ModeConfig",
    # Report models
    "CampaignStats",
    "IterationRecord",
    "Mismatch",
    "Outcome",
    "RunReport",
    "TimingInfo",
    "compute_prevalence",
]
