"""Campaign orchestration: config loading, random streams, the fuzz loop and its artifacts."""

from .settings import (
    ENV_OVERRIDES,
    apply_env_overrides,
    effective_config_json,
    environment,
    load_campaign_config,
)
from .streams import COMPONENTS, Streams, derive_seed
from .reports import (
    CSV_COLUMNS,
    ReportFormat,
    emit_report,
    load_stats,
    stats_csv,
    stats_json,
    write_timing,
)
from .runner import Campaign, CampaignResult, run_campaign, shard_dir
from .merge import MergedView, merge_shards, merge_stats, merged_counts

__all__ = [
    # Configuration
    "ENV_OVERRIDES",
    "apply_env_overrides",
    "effective_config_json",
    "environment",
    "load_campaign_config",
    # Random streams
    "COMPONENTS",
    "Streams",
    "derive_seed",
    # Reports
    "CSV_COLUMNS",
    "ReportFormat",
    "emit_report",
    "load_stats",
    "stats_csv",
    "stats_json",
    "write_timing",
    # Campaign loop
    "Campaign",
    "CampaignResult",
    "run_campaign",
    "shard_dir",
    # Shard merge
    "MergedView",
    "merge_shards",
    "merge_stats",
    "merged_counts",
]
