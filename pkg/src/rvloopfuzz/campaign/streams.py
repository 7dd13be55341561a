"""Per-component random streams derived from the campaign master seed.

Every component draws from its own LFSR, seeded from
``sha256("<master_seed>:<shard>:<component>")``, so one component can be re-run in
isolation without replaying the others.
"""

import hashlib
from dataclasses import dataclass

from ..genmut import Lfsr

COMPONENTS = (
    "mode",
    "generation",
    "mutation",
    "selection",
    "data",
    "coverage",
    "clustering",
    "refinement",
)


def derive_seed(master_seed: int, shard: int, component: str, width: int = 32) -> int:
    """Nonzero ``width``-bit seed for one component of one shard."""
    digest = hashlib.sha256(f"{master_seed}:{shard}:{component}".encode("utf-8")).digest()
    value = int.from_bytes(digest[:8], "little") & ((1 << width) - 1)
    return value or 1


@dataclass
class Streams:
    """The random streams of one campaign shard."""

    mode: Lfsr
    generation: Lfsr
    mutation: Lfsr
    selection: Lfsr
    data: Lfsr
    coverage: Lfsr
    refinement: Lfsr
    clustering: int

    @classmethod
    def derive(cls, master_seed: int, shard: int = 0, width: int = 32) -> "Streams":
        lfsrs = {
            name: Lfsr(derive_seed(master_seed, shard, name, width), width)
            for name in COMPONENTS
            if name != "clustering"
        }
        # scikit-learn takes a 32-bit random_state
        clustering = derive_seed(master_seed, shard, "clustering", 31)
        return cls(clustering=clustering, **lfsrs)


__all__ = ["COMPONENTS", "Streams", "derive_seed"]
