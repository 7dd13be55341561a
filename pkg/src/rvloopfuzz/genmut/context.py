"""Global generation context and the fuzz iteration it describes."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

from ..isa import BLOCK_ALIGN, InstructionBlock, InstructionLibrary
from ..models import HarnessConfig, ModeConfig
from ..validation import ValidationError, validate_alignment


class Mode(str, Enum):
    """How an iteration was produced."""

    DIRECT = "direct"
    MUTATION = "mutation"


@dataclass(frozen=True)
class BlockRecord:
    """Per-block metadata kept by the context."""

    iclass: str
    generated: bool
    target: Optional[int] = None


@dataclass
class GlobalContext:
    """Layout bookkeeping of the executable (surviving) blocks of one iteration.

    Positions are indices into ``block_addresses``. ``block_ids`` maps each position back to
    the block's index in `FuzzIteration.blocks`, which also holds eliminated blocks.
    """

    library: InstructionLibrary = field(repr=False, compare=False)
    code_base: int
    block_align: int = BLOCK_ALIGN
    block_addresses: List[int] = field(default_factory=list)
    block_lengths: List[int] = field(default_factory=list)
    block_ids: List[int] = field(default_factory=list)
    records: List[BlockRecord] = field(default_factory=list)
    fallbacks: List[int] = field(default_factory=list)
    cumulative_count: int = 0
    _next_base: Optional[int] = field(default=None, repr=False, compare=False)
    _positions: Dict[int, int] = field(default_factory=dict, repr=False, compare=False)

    @property
    def next_base_address(self) -> int:
        if self._next_base is not None:
            return self._next_base
        return self.code_base

    @property
    def block_count(self) -> int:
        return len(self.block_addresses)

    @property
    def code_boundary(self) -> int:
        """End address of the laid-out instruction stream."""
        return self.next_base_address

    @property
    def final_count(self) -> int:
        return self.cumulative_count

    def add(self, block: InstructionBlock, generated: bool, block_id: Optional[int] = None) -> int:
        """Append a block at the next base address and return its position."""
        validate_alignment(block.base_address, self.block_align, field="base_address")
        if block.base_address != self.next_base_address:
            raise ValidationError(
                "blocks must be appended at the next base address",
                field="base_address",
                value=block.base_address,
            )
        position = len(self.block_addresses)
        self.block_addresses.append(block.base_address)
        self._positions[block.base_address] = position
        self.block_lengths.append(block.length)
        self.block_ids.append(position if block_id is None else block_id)
        self.records.append(BlockRecord(block.prime.template.iclass, generated))
        self.cumulative_count += block.length
        self._next_base = block.base_address + block.footprint(self.block_align)
        return position

    def set_target(self, position: int, target: int) -> None:
        record = self.records[position]
        self.records[position] = BlockRecord(record.iclass, record.generated, target)

    def record_fallback(self, position: int) -> None:
        self.fallbacks.append(position)

    def position_of(self, address: int) -> int:
        """Position of the block based at ``address``."""
        if address not in self._positions:
            raise ValidationError("no block starts at this address", field="address", value=address)
        return self._positions[address]


@dataclass(frozen=True)
class MemoryPolicy:
    """Memory-region and operand policy used by operand assignment."""

    code_base: int
    code_size: int
    data_base: int
    data_size: int
    p_data_region: float = 3 / 4
    p_misaligned: float = 1 / 64
    p_dynamic_rm: float = 1 / 2
    p_invalid_frm: float = 1 / 16
    jump_range: Optional[int] = 8
    block_align: int = BLOCK_ALIGN

    @classmethod
    def from_configs(cls, mode: ModeConfig, harness: HarnessConfig) -> "MemoryPolicy":
        return cls(
            code_base=harness.code_base,
            code_size=harness.code_size,
            data_base=harness.data_base,
            data_size=harness.data_size,
            p_data_region=mode.p_data_region,
            p_misaligned=mode.p_misaligned,
            p_dynamic_rm=mode.p_dynamic_rm,
            p_invalid_frm=mode.p_invalid_frm,
            jump_range=mode.jump_range,
            block_align=mode.block_align,
        )

    @property
    def data_end(self) -> int:
        return self.data_base + self.data_size

    def in_data(self, address: int, width: int = 1) -> bool:
        return self.data_base <= address and address + width <= self.data_end


@dataclass
class FuzzIteration:
    """Ordered blocks plus the control header and context that make them executable."""

    blocks: List[InstructionBlock]
    control_header: List[bool]
    context: GlobalContext
    data_seed: int
    memory_overlay: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.control_header) != len(self.blocks):
            raise ValidationError(
                "control header needs one flag per block",
                field="control_header",
                value=len(self.control_header),
            )

    def surviving(self) -> Iterator[Tuple[int, InstructionBlock]]:
        for index, block in enumerate(self.blocks):
            if not self.control_header[index]:
                yield index, block

    @property
    def instruction_count(self) -> int:
        return sum(block.length for _, block in self.surviving())

    @property
    def eliminated_count(self) -> int:
        return sum(self.control_header)

    @property
    def code_boundary(self) -> int:
        return self.context.code_boundary

    def target_address(self, index: int) -> int:
        block = self.blocks[index]
        if block.branch_target_block is None:
            raise ValidationError("block has no branch target", field="block", value=index)
        return self.blocks[block.branch_target_block].base_address

    def words(self) -> Iterator[Tuple[int, int]]:
        """(address, word) of every surviving instruction in layout order."""
        for _, block in self.surviving():
            for slot, word in enumerate(block.words):
                yield block.address_of(slot), word

    def __str__(self) -> str:
        return (
            f"FuzzIteration(blocks={len(self.blocks)}, eliminated={self.eliminated_count}, "
            f"instructions={self.instruction_count})"
        )
