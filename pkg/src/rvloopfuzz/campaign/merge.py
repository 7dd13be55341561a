"""Offline merge of shard artifacts: OR-merged coverage and a union timeline."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

import structlog

from ..corpus import Corpus, load_corpus, merge_corpora, save_corpus
from ..coverage import CoverageMap, merge_maps
from ..models import CampaignStats, IterationRecord
from ..validation import MergeError
from .reports import ReportFormat, emit_report, load_stats
from .runner import CORPUS_DIR, COVERAGE_MAP

logger = structlog.get_logger(__name__)

PointKey = Tuple[str, int]


def _check_hashes(stats: Sequence[CampaignStats]) -> None:
    hashes = sorted({s.config_hash for s in stats})
    if len(hashes) > 1:
        raise MergeError("shards come from different configurations", hashes=hashes)


def merge_stats(
    stats: Sequence[CampaignStats], corpus_size: Optional[int] = None
) -> CampaignStats:
    """Merge shard statistics into one timeline.

    Records interleave by (iteration ordinal, shard id) and are renumbered. Each merged
    record's cumulative coverage is the size of the union of every point covered so far,
    hybrid points of all shards included, so the result does not depend on argument order.

    Raises:
        MergeError: If there is nothing to merge or the config hashes differ
    """
    if not stats:
        raise MergeError("nothing to merge")
    _check_hashes(stats)
    ordered = sorted(stats, key=lambda s: min(s.shards))

    covered: Set[PointKey] = set()
    for shard_stats in ordered:
        covered.update(tuple(key) for key in shard_stats.hybrid_point_keys)
    hybrid_keys = sorted(covered)
    instructions = sum(s.hybrid_instructions for s in ordered)

    tagged = [
        (record.ordinal, position, record)
        for position, shard_stats in enumerate(ordered)
        for record in shard_stats.records
    ]
    records: List[IterationRecord] = []
    for ordinal, (_, _, record) in enumerate(sorted(tagged, key=lambda t: (t[0], t[1]))):
        fresh = [tuple(key) for key in record.new_point_keys if tuple(key) not in covered]
        covered.update(fresh)
        instructions += record.executed
        records.append(
            record.model_copy(
                update={
                    "ordinal": ordinal,
                    "new_points": len(fresh),
                    "new_point_keys": fresh,
                    "cumulative_coverage": len(covered),
                    "cumulative_instructions": instructions,
                }
            )
        )

    return CampaignStats(
        config_hash=ordered[0].config_hash,
        shards=sorted(shard for s in ordered for shard in s.shards),
        records=records,
        mismatches=[m for s in ordered for m in s.mismatches],
        final_coverage=len(covered),
        corpus_size=corpus_size if corpus_size is not None else sum(s.corpus_size for s in ordered),
        hybrid_point_keys=hybrid_keys,
        hybrid_instructions=sum(s.hybrid_instructions for s in ordered),
    )


@dataclass
class MergedView:
    """Merged statistics, coverage and corpus of several shards."""

    stats: CampaignStats
    covmap: CoverageMap
    corpus: Optional[Corpus] = None

    def __str__(self) -> str:
        return f"MergedView({self.stats}, covered={self.covmap.total})"


def merge_shards(
    directories: Sequence[Path | str], output_dir: Optional[Path | str] = None
) -> MergedView:
    """Merge the artifacts of shard directories, writing them to ``output_dir`` if given.

    Raises:
        MergeError: If the shards come from different configurations or map layouts
    """
    if not directories:
        raise MergeError("nothing to merge")
    roots = [Path(d) for d in directories]
    shard_stats = [load_stats(root) for root in roots]
    _check_hashes(shard_stats)
    covmap = merge_maps(CoverageMap.load(root / COVERAGE_MAP) for root in roots)

    corpus: Optional[Corpus] = None
    corpus_dirs = [root / CORPUS_DIR for root in roots if (root / CORPUS_DIR).is_dir()]
    if len(corpus_dirs) == len(roots):
        sources = [load_corpus(d) for d in corpus_dirs]
        corpus = merge_corpora(sources, policy=sources[0].policy)

    stats = merge_stats(shard_stats, len(corpus) if corpus is not None else None)
    if stats.final_coverage != covmap.total:
        logger.warning(
            "merge_coverage_disagrees",
            timeline=stats.final_coverage,
            bitmap=covmap.total,
        )

    if output_dir is not None:
        root = Path(output_dir)
        emit_report(stats, root / "stats.json", ReportFormat.JSON)
        emit_report(stats, root / "stats.csv", ReportFormat.CSV)
        covmap.dump(root / COVERAGE_MAP)
        if corpus is not None:
            save_corpus(corpus, root / CORPUS_DIR)

    logger.info(
        "shards_merged",
        shards=stats.shards,
        records=len(stats.records),
        coverage=covmap.total,
    )
    return MergedView(stats, covmap, corpus)


def merged_counts(view: MergedView) -> Dict[str, int]:
    """Per-module N_cov of the merged map."""
    return {module: view.covmap.n_cov(module) for module in view.covmap.modules}


__all__ = ["MergedView", "merge_shards", "merge_stats", "merged_counts"]
