"""Standalone validity checks for fuzz iterations."""

from typing import Dict, List, Optional

from ..isa import InstructionBlock, InstructionLibrary, decode, is_known
from ..isa.templates import STORE_CLASSES
from ..validation import ValidationError
from .context import FuzzIteration, MemoryPolicy


def validate_iteration(
    iteration: FuzzIteration,
    policy: MemoryPolicy,
    library: Optional[InstructionLibrary] = None,
) -> List[str]:
    """Collect every violated iteration invariant.

    Checks that surviving blocks match the context layout and alignment, every word decodes, every
    control-flow target is a surviving block base, eliminated blocks redirect forward,
    static store addresses fall inside the data segment and no instruction belongs to a
    disabled category of ``library``.

    Returns:
        Human-readable problems; empty when the iteration is valid
    """
    problems: List[str] = []
    ctx = iteration.context
    surviving = list(iteration.surviving())

    addresses = [block.base_address for _, block in surviving]
    if addresses != ctx.block_addresses:
        problems.append("surviving block bases differ from the context address table")
    if any(b <= a for a, b in zip(addresses, addresses[1:])):
        problems.append("block addresses are not strictly increasing")
    misaligned = [a for a in addresses if a % ctx.block_align]
    if misaligned:
        problems.append(
            f"{len(misaligned)} block base(s) not {ctx.block_align}-byte aligned, "
            f"first {misaligned[0]:#x}"
        )
    count = sum(block.length for _, block in surviving)
    if count != ctx.cumulative_count:
        problems.append(f"cumulative count {ctx.cumulative_count} != block total {count}")

    surviving_bases: Dict[int, int] = {block.base_address: index for index, block in surviving}
    for index, block in surviving:
        problems.extend(_check_block(index, block, iteration, surviving_bases, policy, library))

    for index, block in enumerate(iteration.blocks):
        if iteration.control_header[index] and block.base_address not in surviving_bases:
            if block.base_address != ctx.code_boundary:
                problems.append(f"eliminated block {index} does not redirect to a survivor")
    return problems


def assert_valid_iteration(
    iteration: FuzzIteration,
    policy: MemoryPolicy,
    library: Optional[InstructionLibrary] = None,
) -> None:
    """Raise `ValidationError` listing the problems of an invalid iteration."""
    problems = validate_iteration(iteration, policy, library)
    if problems:
        raise ValidationError(
            f"iteration violates {len(problems)} invariant(s): {problems[0]}",
            fields=problems[:10],
        )


def _check_block(
    index: int,
    block: InstructionBlock,
    iteration: FuzzIteration,
    surviving_bases: Dict[int, int],
    policy: MemoryPolicy,
    library: Optional[InstructionLibrary],
) -> List[str]:
    problems: List[str] = []
    for slot, instruction in enumerate(block.instructions):
        decoded = decode(instruction.word)
        if not is_known(decoded):
            problems.append(f"block {index} slot {slot}: word {instruction.word:#010x} unknown")
        if library is not None and not library.is_enabled(instruction.template):
            problems.append(
                f"block {index} slot {slot}: {instruction.mnemonic} belongs to a disabled category"
            )

    if block.is_control_flow:
        target = block.branch_target_block
        if target is None or not 0 <= target < len(iteration.blocks):
            problems.append(f"block {index}: branch target {target} out of range")
        elif iteration.control_header[target]:
            problems.append(f"block {index}: branch targets eliminated block {target}")
        else:
            target_base = iteration.blocks[target].base_address
            cf_slot = block.cf_slot if block.cf_slot is not None else block.prime_index
            offset = block.instructions[cf_slot].operand("imm")
            if block.address_of(cf_slot) + offset != target_base:
                problems.append(f"block {index}: branch offset misses block {target}")
            if target_base not in surviving_bases:
                problems.append(f"block {index}: branch target is not a block base")

    prime = block.prime.template
    if prime.iclass in STORE_CLASSES:
        address = static_address(block)
        width = prime.mem_width or 4
        if address is not None and not policy.in_data(address, width):
            problems.append(f"block {index}: store address {address:#x} outside the data segment")
    return problems


def static_address(block: InstructionBlock) -> Optional[int]:
    """Effective address of a memory block whose base comes from its own lui/addi pair."""
    hi_slot = block.role_index("addr_hi")
    lo_slot = block.role_index("addr_lo")
    if hi_slot is None or lo_slot is None:
        return None
    hi = block.instructions[hi_slot].operand("imm")
    lo = block.instructions[lo_slot].operand("imm")
    base = ((hi << 12) + lo) & 0xFFFFFFFF
    if base & 0x80000000:
        base -= 1 << 32
    return base + block.prime.operand("imm", 0)
