"""Corpus scheduling: coverage-increment eviction with a FIFO baseline."""

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Protocol, Sequence

import structlog

from ..genmut import FuzzIteration
from ..models import CorpusPolicy
from ..validation import CorpusLookupError, validate_positive
from .seed import Seed, SeedOrigin

logger = structlog.get_logger(__name__)


class RandomSource(Protocol):
    """What seed selection draws from; `Lfsr` qualifies."""

    def random(self) -> float: ...

    def randbelow(self, n: int) -> int: ...


class InsertAction(str, Enum):
    INSERTED = "inserted"
    REPLACED = "replaced"
    REJECTED = "rejected"


@dataclass(frozen=True)
class InsertResult:
    """Outcome of `Corpus.insert_seed`; ``victim`` is set for replacements."""

    action: InsertAction
    victim: Optional[Seed] = None

    def __str__(self) -> str:
        if self.victim is None:
            return self.action.value
        return f"{self.action.value}({self.victim.seed_id})"


class Corpus:
    """Resident seeds plus the baseline sequences a campaign starts from.

    Residents are kept in insertion order, which is the FIFO eviction order. Lineage
    (seed id to parent id) is remembered for every seed ever offered.
    """

    def __init__(
        self,
        capacity: int = 256,
        policy: CorpusPolicy = CorpusPolicy.COVERAGE,
        baseline: Sequence[Seed] = (),
    ):
        self.capacity = validate_positive(capacity, field="capacity")
        self.policy = CorpusPolicy(policy)
        self.baseline: List[Seed] = list(baseline)
        self._seeds: "OrderedDict[int, Seed]" = OrderedDict()
        self.lineage: Dict[int, Optional[int]] = {}
        self._next_id = max((s.seed_id for s in self.baseline), default=-1) + 1

    def __len__(self) -> int:
        return len(self._seeds)

    def __iter__(self) -> Iterator[Seed]:
        return iter(self._seeds.values())

    def __contains__(self, seed_id: object) -> bool:
        return seed_id in self._seeds

    def __str__(self) -> str:
        return f"Corpus({len(self)}/{self.capacity}, policy={self.policy.value})"

    @property
    def seeds(self) -> List[Seed]:
        return list(self._seeds.values())

    @property
    def next_id(self) -> int:
        return self._next_id

    @next_id.setter
    def next_id(self, value: int) -> None:
        # Ids are never reused.
        self._next_id = max(self._next_id, value)

    def new_seed(
        self,
        iteration: FuzzIteration,
        origin: SeedOrigin,
        parent_id: Optional[int] = None,
        created_at: int = 0,
    ) -> Seed:
        """Create a seed with the next creation ordinal (not yet inserted)."""
        seed = Seed(self._next_id, iteration, origin, parent_id, 0, created_at)
        self._next_id += 1
        return seed

    def restore(self, seed: Seed) -> None:
        """Make a saved seed resident again, bypassing the insertion policy."""
        self._seeds[seed.seed_id] = seed
        self.lineage.setdefault(seed.seed_id, seed.parent_id)
        self.next_id = seed.seed_id + 1

    def get(self, seed_id: int) -> Seed:
        try:
            return self._seeds[seed_id]
        except KeyError:
            raise CorpusLookupError(f"seed {seed_id} is not resident", seed_id=seed_id) from None

    def insert_seed(self, seed: Seed, cov_increment: int) -> InsertResult:
        """Offer a seed scored ``cov_increment``.

        Coverage policy: only improving seeds enter; when full, the resident with the
        smallest increment (oldest on ties) is replaced if the newcomer beats it.
        FIFO policy: always insert, evicting the oldest resident when full.
        """
        scored = seed.with_score(cov_increment)
        self.lineage[seed.seed_id] = seed.parent_id
        self._next_id = max(self._next_id, seed.seed_id + 1)

        if self.policy is CorpusPolicy.FIFO:
            victim = None
            if len(self._seeds) >= self.capacity:
                _, victim = self._seeds.popitem(last=False)
            self._seeds[scored.seed_id] = scored
            result = InsertResult(
                InsertAction.REPLACED if victim else InsertAction.INSERTED, victim
            )
        elif cov_increment <= 0:
            result = InsertResult(InsertAction.REJECTED)
        elif len(self._seeds) < self.capacity:
            self._seeds[scored.seed_id] = scored
            result = InsertResult(InsertAction.INSERTED)
        else:
            victim = self.eviction_candidate()
            if cov_increment > victim.cov_increment:
                del self._seeds[victim.seed_id]
                self._seeds[scored.seed_id] = scored
                result = InsertResult(InsertAction.REPLACED, victim)
            else:
                result = InsertResult(InsertAction.REJECTED)

        logger.debug(
            "seed_offered",
            seed_id=seed.seed_id,
            cov_increment=cov_increment,
            action=result.action.value,
            victim=result.victim.seed_id if result.victim else None,
        )
        return result

    def eviction_candidate(self) -> Seed:
        """Resident with the smallest increment; the oldest among equals."""
        return min(self._seeds.values(), key=lambda s: (s.cov_increment, s.seed_id))

    def best(self) -> Seed:
        """Resident with the largest increment; the oldest among equals."""
        return min(self._seeds.values(), key=lambda s: (-s.cov_increment, s.seed_id))

    def select_seed(self, p_prioritize: float, rng: RandomSource) -> Seed:
        """Pick the best seed with probability ``p_prioritize``, otherwise a uniform one.

        An empty corpus falls back to a uniform pick among the baseline seeds.

        Raises:
            CorpusLookupError: If both the corpus and the baseline are empty
        """
        if not self._seeds:
            if not self.baseline:
                raise CorpusLookupError("corpus and baseline are empty", seed_id=-1)
            return self.baseline[rng.randbelow(len(self.baseline))]
        if rng.random() < p_prioritize:
            return self.best()
        residents = self.seeds
        return residents[rng.randbelow(len(residents))]

    def update_seed_score(self, seed_id: int, new_increment: int) -> None:
        """Replace a resident's increment with its latest measurement."""
        seed = self.get(seed_id)
        self._seeds[seed_id] = seed.with_score(new_increment)

    def ancestry(self, seed_id: int) -> List[int]:
        """Parent chain of a seed, nearest first, as far as lineage is known."""
        chain = []
        parent = self.lineage.get(seed_id)
        while parent is not None and parent not in chain:
            chain.append(parent)
            parent = self.lineage.get(parent)
        return chain
