"""Basic block vectors over fixed-length intervals of a retired-pc trace."""

from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..validation import ConfigurationError

BlockKey = Tuple[str, int]


@dataclass
class Bbv:
    """Entries per basic block (keyed by leader pc) within one interval."""

    ordinal: int
    interval_len: int
    counts: Dict[int, int] = field(default_factory=dict)
    program: str = ""

    @property
    def start(self) -> int:
        """Retired-instruction ordinal the interval starts at."""
        return self.ordinal * self.interval_len

    @property
    def end(self) -> int:
        return self.start + self.interval_len

    @property
    def entries(self) -> int:
        return sum(self.counts.values())

    def keys(self) -> List[BlockKey]:
        return [(self.program, pc) for pc in self.counts]

    def normalized(self) -> Dict[int, float]:
        """Frequencies scaled to unit L1 norm."""
        total = self.entries
        if total == 0:
            return {}
        return {pc: count / total for pc, count in self.counts.items()}

    def __str__(self) -> str:
        return (
            f"Bbv({self.program}#{self.ordinal}, blocks={len(self.counts)}, entries={self.entries})"
        )


def trace_leaders(pcs: Sequence[Optional[int]]) -> Set[int]:
    """Leaders seen in a trace: the first pc, every non-sequential target, and the
    fall-through successor of every instruction that redirected control."""
    leaders: Set[int] = set()
    previous: Optional[int] = None
    for pc in pcs:
        if pc is None:
            continue
        if previous is None:
            leaders.add(pc)
        elif pc != previous + 4:
            leaders.add(pc)
            leaders.add(previous + 4)
        previous = pc
    return leaders


def compute_bbvs(
    pcs: Sequence[Optional[int]],
    interval_len: int,
    leaders: Optional[Collection[int]] = None,
    program: str = "",
) -> List[Bbv]:
    """One vector per full interval of ``interval_len`` retired instructions.

    Args:
        pcs: Retired pcs in order; None marks an instruction outside any basic block
            (a trapped step), which counts towards the interval length only
        interval_len: Interval length in retired instructions
        leaders: Basic-block leader pcs; derived from the trace when omitted
        program: Name recorded on every vector

    Returns:
        Vectors of the full intervals; a trailing partial interval is dropped

    Raises:
        ConfigurationError: If ``interval_len`` is not positive
    """
    if interval_len <= 0:
        raise ConfigurationError(
            f"interval_len must be positive, got {interval_len}", config_key="hybrid.interval_len"
        )
    leader_set = set(leaders) if leaders is not None else trace_leaders(pcs)
    bbvs = []
    for ordinal in range(len(pcs) // interval_len):
        counts: Dict[int, int] = {}
        for pc in pcs[ordinal * interval_len : (ordinal + 1) * interval_len]:
            if pc is not None and pc in leader_set:
                counts[pc] = counts.get(pc, 0) + 1
        bbvs.append(Bbv(ordinal, interval_len, counts, program))
    return bbvs


def bbv_matrix(bbvs: Sequence[Bbv]) -> Tuple[np.ndarray, List[BlockKey]]:
    """Rows of L1-normalized frequencies over the union of blocks of all programs."""
    columns = sorted({key for bbv in bbvs for key in bbv.keys()})
    index = {key: i for i, key in enumerate(columns)}
    matrix = np.zeros((len(bbvs), len(columns)), dtype=np.float64)
    for row, bbv in enumerate(bbvs):
        for pc, value in bbv.normalized().items():
            matrix[row, index[(bbv.program, pc)]] = value
    return matrix, columns
