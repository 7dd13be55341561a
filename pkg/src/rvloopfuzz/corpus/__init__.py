"""Seed storage and coverage-increment scheduling."""

from .seed import Seed, SeedOrigin, StimulusEntry
from .corpus import Corpus, InsertAction, InsertResult, RandomSource
from .baseline import BASELINE_PROGRAMS, baseline_seeds
from .store import load_corpus, merge_corpora, save_corpus

__all__ = [
    # Seeds
    "Seed",
    "SeedOrigin",
    "StimulusEntry",
    # Scheduling
    "Corpus",
    "InsertAction",
    "InsertResult",
    "RandomSource",
    # Baseline programs
    "BASELINE_PROGRAMS",
    "baseline_seeds",
    # Persistence
    "load_corpus",
    "merge_corpora",
    "save_corpus",
]
