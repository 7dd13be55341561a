"""Memory image of one iteration: read-only code segment plus LFSR-filled data segment."""

import hashlib
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

import structlog

from ..genmut import FuzzIteration, Lfsr
from ..isa import NOP_WORD, BlockKind
from ..models import HarnessConfig
from ..validation import ValidationError
from .traps import (
    INSTRUCTION_ACCESS_FAULT,
    INSTRUCTION_MISALIGNED,
    LOAD_ACCESS_FAULT,
    STORE_ACCESS_FAULT,
    ArchTrap,
)

logger = structlog.get_logger(__name__)

_NOP_BYTES = NOP_WORD.to_bytes(4, "little")


@dataclass
class MemoryImage:
    """Code and data segments with their bounds.

    The code segment holds the surviving blocks laid out from ``code_base`` with
    alignment gaps filled by NOPs up to ``code_boundary``; the rest of the segment is
    zero. Stores may only target the data segment.
    """

    code_base: int
    code: bytearray
    code_boundary: int
    data_base: int
    data: bytearray
    prologue_ranges: Tuple[Tuple[int, int], ...] = ()
    block_addresses: FrozenSet[int] = field(default_factory=frozenset)

    @property
    def code_end(self) -> int:
        return self.code_base + len(self.code)

    @property
    def data_end(self) -> int:
        return self.data_base + len(self.data)

    @property
    def generated_count(self) -> int:
        """Fuzz and benchmark block instructions in the image."""
        return len(self.block_addresses)

    def copy(self) -> "MemoryImage":
        return MemoryImage(
            self.code_base,
            bytearray(self.code),
            self.code_boundary,
            self.data_base,
            bytearray(self.data),
            self.prologue_ranges,
            self.block_addresses,
        )

    def in_code(self, address: int, width: int = 1) -> bool:
        return self.code_base <= address and address + width <= self.code_end

    def in_data(self, address: int, width: int = 1) -> bool:
        return self.data_base <= address and address + width <= self.data_end

    def is_prologue(self, pc: int) -> bool:
        return any(start <= pc < end for start, end in self.prologue_ranges)

    def is_fuzz_instruction(self, pc: int) -> bool:
        """Counts towards prevalence: a slot of a fuzz or benchmark block.

        Alignment padding and prologue blocks are excluded.
        """
        return pc in self.block_addresses

    def fetch(self, pc: int) -> int:
        if pc & 3:
            raise ArchTrap(INSTRUCTION_MISALIGNED, tval=pc)
        if not self.in_code(pc, 4):
            raise ArchTrap(INSTRUCTION_ACCESS_FAULT, tval=pc)
        offset = pc - self.code_base
        return int.from_bytes(self.code[offset : offset + 4], "little")

    def load(self, address: int, width: int) -> int:
        """Unsigned little-endian read from either segment."""
        if self.in_data(address, width):
            offset = address - self.data_base
            return int.from_bytes(self.data[offset : offset + width], "little")
        if self.in_code(address, width):
            offset = address - self.code_base
            return int.from_bytes(self.code[offset : offset + width], "little")
        raise ArchTrap(LOAD_ACCESS_FAULT, tval=address)

    def store(self, address: int, width: int, value: int) -> None:
        if not self.in_data(address, width):
            raise ArchTrap(STORE_ACCESS_FAULT, tval=address)
        offset = address - self.data_base
        self.data[offset : offset + width] = (value & ((1 << (8 * width)) - 1)).to_bytes(
            width, "little"
        )

    def check_store(self, address: int, width: int) -> None:
        """Raise the access fault a store to ``address`` would raise, without writing."""
        if not self.in_data(address, width):
            raise ArchTrap(STORE_ACCESS_FAULT, tval=address)

    def code_digest(self) -> str:
        return hashlib.sha256(bytes(self.code)).hexdigest()

    def digest(self) -> str:
        """sha256 over both segments."""
        h = hashlib.sha256(bytes(self.code))
        h.update(bytes(self.data))
        return h.hexdigest()

    def __str__(self) -> str:
        return (
            f"MemoryImage(code={self.code_base:#x}..{self.code_boundary:#x}, "
            f"data={self.data_base:#x}+{len(self.data):#x})"
        )


def data_segment(data_seed: int, size: int) -> bytearray:
    """Data segment bytes: the byte stream of a 32-bit LFSR seeded with ``data_seed``."""
    return bytearray(Lfsr(data_seed, 32).fill_bytes(size))


def build_memory(
    iteration: FuzzIteration,
    config: Optional[HarnessConfig] = None,
    data_seed: Optional[int] = None,
) -> MemoryImage:
    """Lay out the surviving blocks and fill the data segment.

    Args:
        iteration: Iteration to load; eliminated blocks are left out
        config: Segment layout; defaults to `HarnessConfig()`
        data_seed: Overrides ``iteration.data_seed``

    Returns:
        The image, identical for identical (iteration, data_seed)

    Raises:
        ValidationError: If the laid-out blocks overflow the code segment
    """
    config = config or HarnessConfig()
    boundary = iteration.code_boundary
    code = bytearray(config.code_size)
    used = boundary - config.code_base
    if used > config.code_size:
        raise ValidationError(
            f"iteration needs {used:#x} code bytes, segment holds {config.code_size:#x}",
            field="code_size",
            value=used,
        )
    code[:used] = _NOP_BYTES * (used // 4)

    prologue = []
    addresses = set()
    for _, block in iteration.surviving():
        offset = block.base_address - config.code_base
        for slot, word in enumerate(block.words):
            code[offset + 4 * slot : offset + 4 * slot + 4] = word.to_bytes(4, "little")
        if block.kind is BlockKind.PROLOGUE:
            prologue.append((block.base_address, block.end_address))
        else:
            addresses.update(block.address_of(slot) for slot in range(block.length))

    seed = iteration.data_seed if data_seed is None else data_seed
    data = data_segment(seed, config.data_size)
    for address, value in iteration.memory_overlay.items():
        if config.data_base <= address < config.data_base + config.data_size:
            data[address - config.data_base] = value & 0xFF

    image = MemoryImage(
        code_base=config.code_base,
        code=code,
        code_boundary=boundary,
        data_base=config.data_base,
        data=data,
        prologue_ranges=tuple(prologue),
        block_addresses=frozenset(addresses),
    )
    logger.debug(
        "memory_built",
        boundary=boundary,
        blocks=len(addresses),
        data_seed=seed,
        overlay=len(iteration.memory_overlay),
    )
    return image
