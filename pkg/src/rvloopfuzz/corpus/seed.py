"""Seeds: archived iterations with scheduling metadata."""

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

from ..genmut import FuzzIteration


class SeedOrigin(str, Enum):
    """Which engine produced the seed."""

    BASELINE = "baseline"
    DIRECT = "direct"
    MUTATION = "mutation"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class StimulusEntry:
    """One executable instruction of a seed."""

    word: int
    position: int
    is_cf: bool
    target_position: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Seed:
    """An iteration kept in the corpus.

    ``seed_id`` doubles as the creation ordinal; lower ids are older.
    """

    seed_id: int
    iteration: FuzzIteration = field(repr=False)
    origin: SeedOrigin = SeedOrigin.DIRECT
    parent_id: Optional[int] = None
    cov_increment: int = 0
    created_at: int = 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Seed) and other.seed_id == self.seed_id

    def __hash__(self) -> int:
        return hash(self.seed_id)

    def __str__(self) -> str:
        return (
            f"Seed(id={self.seed_id}, origin={self.origin.value}, "
            f"cov_increment={self.cov_increment})"
        )

    def with_score(self, cov_increment: int) -> "Seed":
        return replace(self, cov_increment=cov_increment)

    @cached_property
    def entries(self) -> Tuple[StimulusEntry, ...]:
        """Executable instructions in layout order with their control-flow targets."""
        start_of = {}
        position = 0
        for index, block in self.iteration.surviving():
            start_of[index] = position
            position += block.length

        entries = []
        for index, block in self.iteration.surviving():
            base = start_of[index]
            for slot, word in enumerate(block.words):
                is_cf = block.cf_slot == slot
                target = start_of.get(block.branch_target_block) if is_cf else None
                entries.append(StimulusEntry(word, base + slot, is_cf, target))
        return tuple(entries)

    @property
    def instruction_count(self) -> int:
        return self.iteration.instruction_count
