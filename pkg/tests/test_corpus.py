"""Tests for seeds, corpus scheduling, persistence and baseline programs."""

from collections import Counter, deque
from itertools import permutations

import hypothesis.strategies as st
import pytest
from hypothesis import settings
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from rvloopfuzz.corpus import (
    Corpus,
    InsertAction,
    Seed,
    SeedOrigin,
    baseline_seeds,
    load_corpus,
    merge_corpora,
    save_corpus,
)
from rvloopfuzz.genmut import Lfsr, validate_iteration
from rvloopfuzz.models import CorpusPolicy
from rvloopfuzz.validation import CorpusLookupError

_ITERATION = baseline_seeds()[0].iteration


def _seed(seed_id, parent=None):
    return Seed(seed_id, _ITERATION, SeedOrigin.DIRECT, parent)


def _filled(scores, policy=CorpusPolicy.COVERAGE):
    corpus = Corpus(capacity=len(scores), policy=policy)
    for seed_id, score in enumerate(scores):
        corpus.insert_seed(_seed(seed_id), score)
    return corpus


class TestSeed:
    """Test seed metadata."""

    def test_entries(self, small_iteration):
        """Entries are increasing and targets are set exactly for control flow."""
        seed = Seed(0, small_iteration)
        positions = [e.position for e in seed.entries]
        assert positions == sorted(set(positions))
        assert len(seed.entries) == small_iteration.instruction_count
        for entry in seed.entries:
            assert (entry.target_position is not None) == entry.is_cf

    def test_cf_target_positions(self, small_iteration):
        """A control-flow entry points at its target block's first instruction."""
        seed = Seed(0, small_iteration)
        starts = set()
        position = 0
        for _, block in small_iteration.surviving():
            starts.add(position)
            position += block.length
        assert all(e.target_position in starts for e in seed.entries if e.is_cf)


class TestInsertSeed:
    """Test insertion and eviction."""

    def test_zero_increment_rejected(self):
        """Coverage policy rejects seeds that add nothing."""
        corpus = Corpus(capacity=4)
        assert corpus.insert_seed(_seed(0), 0).action is InsertAction.REJECTED
        assert len(corpus) == 0

    def test_replaces_minimum(self):
        """A newcomer replaces the weakest resident it beats."""
        corpus = _filled([5, 3, 9])
        result = corpus.insert_seed(_seed(3), 4)
        assert result.action is InsertAction.REPLACED
        assert result.victim.seed_id == 1
        assert sorted(s.cov_increment for s in corpus) == [4, 5, 9]

    def test_rejects_weaker_newcomer_in_every_order(self):
        """Score 2 against a full {5, 3, 9} corpus is rejected whatever the order."""
        for scores in permutations([5, 3, 9]):
            corpus = _filled(list(scores))
            assert corpus.insert_seed(_seed(3), 2).action is InsertAction.REJECTED
            assert sorted(s.cov_increment for s in corpus) == [3, 5, 9]

    def test_fifo_evicts_oldest(self):
        """FIFO always inserts and drops the oldest."""
        corpus = _filled([5, 3, 9], CorpusPolicy.FIFO)
        result = corpus.insert_seed(_seed(3), 0)
        assert result.action is InsertAction.REPLACED
        assert result.victim.seed_id == 0
        assert [s.seed_id for s in corpus] == [1, 2, 3]

    def test_capacity_one(self):
        """A one-seed corpus keeps the better of two."""
        corpus = Corpus(capacity=1)
        corpus.insert_seed(_seed(0), 2)
        corpus.insert_seed(_seed(1), 7)
        assert [s.seed_id for s in corpus] == [1]


class TestSelectSeed:
    """Test seed selection."""

    def test_always_best(self, lfsr):
        """p=1 returns the highest score."""
        corpus = _filled([4, 8, 1])
        assert all(corpus.select_seed(1.0, lfsr).seed_id == 1 for _ in range(100))

    def test_uniform(self, lfsr):
        """p=0 draws uniformly."""
        corpus = _filled(list(range(1, 11)))
        draws = 100_000
        counts = Counter(corpus.select_seed(0.0, lfsr).seed_id for _ in range(draws))
        for count in counts.values():
            assert abs(count / draws - 0.1) < 0.01

    def test_tie_break(self, lfsr):
        """Equal scores resolve to the oldest seed."""
        corpus = _filled([7, 2, 7])
        assert corpus.select_seed(1.0, lfsr).seed_id == 0

    def test_empty_falls_back_to_baseline(self, lfsr):
        """An empty corpus hands out baseline seeds."""
        baseline = baseline_seeds()
        corpus = Corpus(capacity=4, baseline=baseline)
        assert corpus.select_seed(0.75, lfsr).origin is SeedOrigin.BASELINE

    def test_empty_without_baseline(self, lfsr):
        """Nothing to select is a lookup error."""
        with pytest.raises(CorpusLookupError):
            Corpus(capacity=2).select_seed(0.5, lfsr)


class TestUpdateSeedScore:
    """Test score updates."""

    def test_last_measurement_wins(self):
        """Updates replace the stored increment."""
        corpus = _filled([5])
        corpus.update_seed_score(0, 9)
        assert corpus.get(0).cov_increment == 9

    def test_unknown_seed(self):
        """Updating an evicted seed fails."""
        corpus = _filled([5, 3, 9])
        corpus.insert_seed(_seed(3), 4)
        with pytest.raises(CorpusLookupError):
            corpus.update_seed_score(1, 6)

    def test_zero_score_evicted_first(self):
        """A seed updated to zero becomes the next victim."""
        corpus = _filled([5, 3, 9])
        corpus.update_seed_score(2, 0)
        result = corpus.insert_seed(_seed(3), 1)
        assert result.victim.seed_id == 2


class TestLineage:
    """Test lineage bookkeeping."""

    def test_ancestry(self):
        """Parents are remembered even after eviction."""
        corpus = Corpus(capacity=1)
        corpus.insert_seed(_seed(0), 1)
        corpus.insert_seed(_seed(1, parent=0), 2)
        corpus.insert_seed(_seed(2, parent=1), 3)
        assert corpus.ancestry(2) == [1, 0]

    def test_new_seed_ordinals(self):
        """Fresh seeds get increasing ids."""
        corpus = Corpus(capacity=2)
        a = corpus.new_seed(_ITERATION, SeedOrigin.DIRECT)
        b = corpus.new_seed(_ITERATION, SeedOrigin.MUTATION, parent_id=a.seed_id)
        assert b.seed_id == a.seed_id + 1


class TestPersistence:
    """Test corpus files."""

    def test_round_trip(self, tmp_path, small_iteration):
        """Saved corpora load with identical residents and scores."""
        corpus = Corpus(capacity=3)
        corpus.insert_seed(Seed(0, small_iteration), 4)
        corpus.insert_seed(Seed(1, _ITERATION, SeedOrigin.MUTATION, parent_id=0), 2)
        save_corpus(corpus, tmp_path / "corpus")
        loaded = load_corpus(tmp_path / "corpus")
        assert [(s.seed_id, s.cov_increment, s.parent_id) for s in loaded] == [
            (0, 4, None),
            (1, 2, 0),
        ]
        assert loaded.get(0).iteration == small_iteration
        assert loaded.next_id == corpus.next_id

    def test_merge_keeps_top_scores(self):
        """Merging re-evicts by score."""
        a = _filled([1, 6])
        b = _filled([5, 2])
        merged = merge_corpora([a, b], capacity=2)
        assert sorted(s.cov_increment for s in merged) == [5, 6]


class TestBaseline:
    """Test the smoke programs."""

    def test_baseline_valid(self, policy):
        """Every baseline seed passes the iteration validator."""
        seeds = baseline_seeds()
        assert len(seeds) >= 5
        for seed in seeds:
            assert validate_iteration(seed.iteration, policy) == []

    def test_gated_baseline(self, i_only_library):
        """Only programs inside the enabled categories are offered."""
        seeds = baseline_seeds(library=i_only_library)
        assert seeds
        for seed in seeds:
            for _, block in seed.iteration.surviving():
                assert all(i.template.category.value == "I" for i in block.instructions)


class CorpusMachine(RuleBasedStateMachine):
    """Coverage corpus against a brute-force reference."""

    CAPACITY = 4

    def __init__(self):
        super().__init__()
        self.corpus = Corpus(capacity=self.CAPACITY)
        self.model = []
        self.next_id = 0

    @rule(score=st.integers(min_value=0, max_value=6))
    def insert(self, score):
        seed_id = self.next_id
        self.next_id += 1
        expected_victim = None
        if score > 0:
            if len(self.model) < self.CAPACITY:
                self.model.append([seed_id, score])
            else:
                victim = min(self.model, key=lambda e: (e[1], e[0]))
                if score > victim[1]:
                    self.model.remove(victim)
                    self.model.append([seed_id, score])
                    expected_victim = victim[0]
        result = self.corpus.insert_seed(_seed(seed_id), score)
        assert (result.victim.seed_id if result.victim else None) == expected_victim

    @precondition(lambda self: self.model)
    @rule(data=st.data(), score=st.integers(min_value=0, max_value=6))
    def update(self, data, score):
        entry = data.draw(st.sampled_from(self.model))
        entry[1] = score
        self.corpus.update_seed_score(entry[0], score)

    @precondition(lambda self: self.model)
    @rule()
    def select_best(self):
        best = min(self.model, key=lambda e: (-e[1], e[0]))
        assert self.corpus.select_seed(1.0, Lfsr(1, 32)).seed_id == best[0]

    @invariant()
    def matches_model(self):
        assert len(self.corpus) <= self.CAPACITY
        assert sorted((s.seed_id, s.cov_increment) for s in self.corpus) == sorted(
            tuple(e) for e in self.model
        )


class FifoMachine(RuleBasedStateMachine):
    """FIFO corpus against a bounded deque."""

    CAPACITY = 3

    def __init__(self):
        super().__init__()
        self.corpus = Corpus(capacity=self.CAPACITY, policy=CorpusPolicy.FIFO)
        self.model = deque(maxlen=self.CAPACITY)
        self.next_id = 0

    @rule(score=st.integers(min_value=0, max_value=6))
    def insert(self, score):
        self.corpus.insert_seed(_seed(self.next_id), score)
        self.model.append(self.next_id)
        self.next_id += 1

    @invariant()
    def matches_queue(self):
        assert [s.seed_id for s in self.corpus] == list(self.model)


TestCorpusMachine = CorpusMachine.TestCase
TestCorpusMachine.settings = settings(max_examples=50, stateful_step_count=40, deadline=None)
TestFifoMachine = FifoMachine.TestCase
TestFifoMachine.settings = settings(max_examples=30, stateful_step_count=30, deadline=None)
