"""Statistics artifacts: the JSON stats document, the CSV series and timing."""

import csv
import io
import json
from enum import Enum
from pathlib import Path
from typing import List

import structlog

from ..models import CampaignStats, IterationRecord, TimingInfo
from ..serialization import read_json_document
from ..validation import ValidationError

logger = structlog.get_logger(__name__)

STATS_JSON = "stats.json"
STATS_CSV = "stats.csv"
TIMING_JSON = "timing.json"

CSV_COLUMNS: List[str] = [
    "ordinal",
    "mode",
    "executed",
    "fuzz_instructions",
    "prevalence",
    "new_points",
    "cumulative_coverage",
    "cumulative_instructions",
    "corpus_action",
    "outcome",
]


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def stats_json(stats: CampaignStats) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(stats.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _csv_row(record: IterationRecord) -> List[str]:
    return [
        str(record.ordinal),
        record.mode,
        str(record.executed),
        str(record.fuzz_instructions),
        f"{record.prevalence:.6f}",
        str(record.new_points),
        str(record.cumulative_coverage),
        str(record.cumulative_instructions),
        record.corpus_action,
        record.outcome.value,
    ]


def stats_csv(stats: CampaignStats) -> str:
    """One header line plus one line per iteration record."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(_csv_row(record) for record in stats.records)
    return buffer.getvalue()


def emit_report(stats: CampaignStats, path: Path | str, fmt: ReportFormat | str) -> Path:
    """Write ``stats`` as ``fmt`` to ``path``; a directory receives the default file name.

    Raises:
        OSError: If the path cannot be written
    """
    fmt = ReportFormat(fmt)
    target = Path(path)
    if target.is_dir():
        target = target / (STATS_CSV if fmt is ReportFormat.CSV else STATS_JSON)
    target.parent.mkdir(parents=True, exist_ok=True)
    text = stats_csv(stats) if fmt is ReportFormat.CSV else stats_json(stats)
    target.write_text(text, encoding="utf-8")
    logger.info("report_written", path=str(target), format=fmt.value, records=len(stats.records))
    return target


def load_stats(path: Path | str) -> CampaignStats:
    """Reload a JSON stats document written by `emit_report`.

    Raises:
        ValidationError: If the document is not a stats document
    """
    target = Path(path)
    if target.is_dir():
        target = target / STATS_JSON
    try:
        document = read_json_document(target)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read stats {target}: {e}", field="stats", cause=e) from e
    try:
        return CampaignStats.model_validate(document)
    except ValueError as e:
        raise ValidationError(
            f"{target} is not a stats document", field="stats", value=str(target), cause=e
        ) from e


def write_timing(timing: TimingInfo, directory: Path | str) -> Path:
    """Throughput figures, kept out of the deterministic stats files."""
    target = Path(directory) / TIMING_JSON
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps(timing.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return target


__all__ = [
    "CSV_COLUMNS",
    "ReportFormat",
    "STATS_CSV",
    "STATS_JSON",
    "TIMING_JSON",
    "emit_report",
    "load_stats",
    "stats_csv",
    "stats_json",
    "write_timing",
]
