"""Instruction blocks: a prime instruction with its affiliated instructions."""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Protocol, Tuple

from ..validation import ValidationError, validate_alignment
from .encoding import Instruction
from .library import InstructionLibrary
from .templates import InstrTemplate, Placement

INSTRUCTION_ALIGN = 4
BLOCK_ALIGN = 4
PRIME_ROLE = "prime"


class BlockKind(str, Enum):
    """Origin of a block's instructions."""

    FUZZ = "fuzz"
    PROLOGUE = "prologue"
    BENCHMARK = "benchmark"


def align_up(address: int, alignment: int = BLOCK_ALIGN) -> int:
    return (address + alignment - 1) & ~(alignment - 1)


@dataclass(frozen=True)
class InstructionBlock:
    """The atomic unit of generation and mutation."""

    instructions: Tuple[Instruction, ...]
    roles: Tuple[str, ...]
    prime_index: int
    base_address: int
    kind: BlockKind = BlockKind.FUZZ
    cf_slot: Optional[int] = None
    branch_target_block: Optional[int] = None

    def __post_init__(self) -> None:
        validate_alignment(self.base_address, INSTRUCTION_ALIGN, field="base_address")
        if len(self.roles) != len(self.instructions):
            raise ValidationError(
                "every block instruction needs a role", field="roles", value=len(self.roles)
            )
        if not 0 <= self.prime_index < len(self.instructions):
            raise ValidationError(
                "prime index outside the block", field="prime_index", value=self.prime_index
            )
        if (self.cf_slot is None) != (self.branch_target_block is None):
            raise ValidationError(
                "branch target must be present exactly for control-flow blocks",
                field="branch_target_block",
                value=self.branch_target_block,
            )

    @property
    def prime(self) -> Instruction:
        return self.instructions[self.prime_index]

    @property
    def affiliated(self) -> Tuple[Instruction, ...]:
        return self.instructions[: self.prime_index] + self.instructions[self.prime_index + 1 :]

    @property
    def length(self) -> int:
        return len(self.instructions)

    @property
    def is_control_flow(self) -> bool:
        return self.cf_slot is not None

    @property
    def cf_instruction(self) -> Optional[Instruction]:
        return None if self.cf_slot is None else self.instructions[self.cf_slot]

    @property
    def words(self) -> Tuple[int, ...]:
        return tuple(instr.word for instr in self.instructions)

    @property
    def end_address(self) -> int:
        """First byte after the block's instructions."""
        return self.base_address + 4 * self.length

    def footprint(self, alignment: int = BLOCK_ALIGN) -> int:
        """Bytes the block occupies including trailing padding up to ``alignment``."""
        return align_up(4 * self.length, alignment)

    def address_of(self, slot: int) -> int:
        return self.base_address + 4 * slot

    def role_index(self, role: str) -> Optional[int]:
        for index, name in enumerate(self.roles):
            if name == role:
                return index
        return None

    def at(self, base_address: int) -> "InstructionBlock":
        return replace(self, base_address=base_address)

    def with_instruction(self, slot: int, instruction: Instruction) -> "InstructionBlock":
        updated = list(self.instructions)
        updated[slot] = instruction
        return replace(self, instructions=tuple(updated))

    def with_target(self, target: int) -> "InstructionBlock":
        return replace(self, branch_target_block=target)

    def __str__(self) -> str:
        return (
            f"InstructionBlock({self.prime.mnemonic}, len={self.length}, "
            f"base={self.base_address:#x})"
        )


class BlockContext(Protocol):
    """What `build_block` needs from the surrounding generation context."""

    library: InstructionLibrary

    @property
    def next_base_address(self) -> int: ...

    @property
    def block_count(self) -> int: ...


def build_block(prime: InstrTemplate, context: BlockContext) -> InstructionBlock:
    """Bundle a prime template with its affiliated templates.

    Operands are placeholders (zero, or the values the affiliate spec pins) until operand
    assignment. Affiliates are not expanded recursively. A control-flow block initially
    targets itself.
    """
    library = context.library
    before = [a for a in prime.affiliates if a.placement is Placement.BEFORE]
    after = [a for a in prime.affiliates if a.placement is Placement.AFTER]

    instructions = []
    roles = []
    for affiliate in before:
        instructions.append(_placeholder(library.get(affiliate.template), affiliate.operands))
        roles.append(affiliate.role)
    prime_index = len(instructions)
    instructions.append(_placeholder(prime, ()))
    roles.append(PRIME_ROLE)
    for affiliate in after:
        instructions.append(_placeholder(library.get(affiliate.template), affiliate.operands))
        roles.append(affiliate.role)

    is_cf = prime.is_control_flow
    return InstructionBlock(
        instructions=tuple(instructions),
        roles=tuple(roles),
        prime_index=prime_index,
        base_address=context.next_base_address,
        kind=BlockKind.FUZZ,
        cf_slot=prime_index if is_cf else None,
        branch_target_block=context.block_count if is_cf else None,
    )


def _placeholder(template: InstrTemplate, pinned: Tuple[Tuple[str, int], ...]) -> Instruction:
    values = template.default_operands()
    values.update(dict(pinned))
    return Instruction.of(template, values)
