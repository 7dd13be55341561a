"""Corpus persistence: seed dumps plus an index manifest."""

import json
from pathlib import Path
from typing import Iterable, List, Optional

import structlog

from ..genmut import read_iteration, save_iteration
from ..isa import InstructionLibrary
from ..models import CorpusPolicy
from ..serialization import read_json_document
from ..validation import ValidationError
from .corpus import Corpus
from .seed import Seed, SeedOrigin

logger = structlog.get_logger(__name__)

INDEX_NAME = "index.json"


def save_corpus(corpus: Corpus, directory: Path | str) -> Path:
    """Write ``seed-<id>.bin`` per resident and ``index.json`` with scores and lineage."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for seed in corpus:
        name = f"seed-{seed.seed_id:06d}.bin"
        save_iteration(seed.iteration, root / name)
        records.append(
            {
                "seed_id": seed.seed_id,
                "file": name,
                "origin": seed.origin.value,
                "parent_id": seed.parent_id,
                "cov_increment": seed.cov_increment,
                "created_at": seed.created_at,
            }
        )
    index = {
        "capacity": corpus.capacity,
        "policy": corpus.policy.value,
        "next_id": corpus.next_id,
        "seeds": records,
        "lineage": {str(k): v for k, v in corpus.lineage.items()},
    }
    path = root / INDEX_NAME
    path.write_text(json.dumps(index, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("corpus_saved", path=str(root), seeds=len(records))
    return path


def load_corpus(
    directory: Path | str,
    library: Optional[InstructionLibrary] = None,
    baseline: Iterable[Seed] = (),
) -> Corpus:
    """Rebuild a corpus written by `save_corpus`, residents in their saved order."""
    root = Path(directory)
    index_path = root / INDEX_NAME
    if not index_path.exists():
        raise ValidationError("corpus index missing", field="index", value=str(index_path))
    index = read_json_document(index_path)
    corpus = Corpus(index["capacity"], CorpusPolicy(index["policy"]), list(baseline))
    for record in index["seeds"]:
        seed = Seed(
            seed_id=record["seed_id"],
            iteration=read_iteration(root / record["file"], library),
            origin=SeedOrigin(record["origin"]),
            parent_id=record["parent_id"],
            cov_increment=record["cov_increment"],
            created_at=record["created_at"],
        )
        corpus.restore(seed)
    corpus.lineage.update({int(k): v for k, v in index["lineage"].items()})
    corpus.next_id = index["next_id"]
    return corpus


def merge_corpora(
    corpora: Iterable[Corpus],
    capacity: Optional[int] = None,
    policy: CorpusPolicy = CorpusPolicy.COVERAGE,
) -> Corpus:
    """Union of several corpora, re-evicted by score.

    Seeds are renumbered in merge order; lineage ids refer to the renumbered seeds where
    the parent was merged too and are dropped otherwise.
    """
    sources: List[Corpus] = list(corpora)
    capacity = capacity or max((c.capacity for c in sources), default=256)
    pool = []
    for shard, corpus in enumerate(sources):
        for seed in corpus:
            pool.append((shard, seed))

    renumber = {(shard, seed.seed_id): new_id for new_id, (shard, seed) in enumerate(pool)}

    def order(item):
        return renumber[(item[0], item[1].seed_id)]

    ranked = sorted(pool, key=lambda item: (-item[1].cov_increment, order(item)))
    kept = sorted(ranked[:capacity], key=order)

    merged = Corpus(capacity, policy)
    for shard, seed in kept:
        new_id = renumber[(shard, seed.seed_id)]
        parent = renumber.get((shard, seed.parent_id)) if seed.parent_id is not None else None
        merged.restore(
            Seed(new_id, seed.iteration, seed.origin, parent, seed.cov_increment, seed.created_at)
        )
    merged.next_id = len(pool)
    logger.info("corpora_merged", sources=len(sources), offered=len(pool), kept=len(kept))
    return merged
