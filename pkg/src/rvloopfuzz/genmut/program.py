"""Turn straight assembled programs into block-structured iterations."""

from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set

from ..isa import (
    PRIME_ROLE,
    BlockKind,
    Instruction,
    InstructionBlock,
    InstructionLibrary,
    asm,
    default_library,
)
from ..validation import ValidationError
from .context import FuzzIteration, GlobalContext

BODY_ROLE = "body"


def static_target(instruction: Instruction, pc: int) -> Optional[int]:
    """Target address of a pc-relative branch or jump at ``pc``."""
    if instruction.template.is_control_flow:
        return pc + instruction.operand("imm")
    return None


def basic_block_leaders(
    program: Sequence[Instruction], base: int, extra: Iterable[int] = ()
) -> Set[int]:
    """First pc, every static target, every pc after a control-flow instruction."""
    end = base + 4 * len(program)
    leaders = {base}
    for index, instruction in enumerate(program):
        pc = base + 4 * index
        target = static_target(instruction, pc)
        if target is not None:
            if not base <= target < end:
                raise ValidationError(
                    f"branch at {pc:#x} leaves the program", field="target", value=target
                )
            leaders.add(target)
            if pc + 4 < end:
                leaders.add(pc + 4)
    leaders.update(pc for pc in extra if base <= pc < end)
    return leaders


def iteration_from_program(
    program: Sequence[Instruction],
    program_base: int,
    code_base: int,
    library: Optional[InstructionLibrary] = None,
    kind: BlockKind = BlockKind.BENCHMARK,
    prologue: Sequence[Instruction] = (),
    entry_pc: Optional[int] = None,
    extra_leaders: Iterable[int] = (),
    data_seed: int = 1,
    memory_overlay: Optional[Mapping[int, int]] = None,
) -> FuzzIteration:
    """Split a program at its basic-block leaders and lay the blocks out from ``code_base``.

    Branch and jump offsets are re-encoded for the new layout. A non-empty ``prologue``
    becomes block 0, closed by a jal to the block starting at ``entry_pc``; an ``entry_pc``
    other than ``program_base`` gets that block even when the prologue is empty.
    """
    library = library or default_library()
    extra = list(extra_leaders)
    if entry_pc is not None:
        extra.append(entry_pc)
    leaders = sorted(basic_block_leaders(program, program_base, extra))

    pieces: List[List[Instruction]] = []
    starts: List[int] = []
    for index, instruction in enumerate(program):
        pc = program_base + 4 * index
        if pc in leaders:
            pieces.append([])
            starts.append(pc)
        pieces[-1].append(instruction)

    head_block = bool(prologue) or (entry_pc is not None and entry_pc != program_base)
    offset = 1 if head_block else 0
    block_of_pc: Dict[int, int] = {pc: offset + i for i, pc in enumerate(starts)}
    ctx = GlobalContext(library=library, code_base=code_base)
    blocks: List[InstructionBlock] = []

    if head_block:
        closing = list(prologue) + [asm("jal", library, rd=0, imm=0)]
        head = InstructionBlock(
            instructions=tuple(closing),
            roles=tuple([BODY_ROLE] * (len(closing) - 1) + [PRIME_ROLE]),
            prime_index=len(closing) - 1,
            base_address=ctx.next_base_address,
            kind=BlockKind.PROLOGUE,
            cf_slot=len(closing) - 1,
            branch_target_block=block_of_pc[entry_pc if entry_pc is not None else program_base],
        )
        ctx.add(head, generated=False)
        blocks.append(head)

    original_targets: Dict[int, int] = {}
    for start, piece in zip(starts, pieces):
        last = piece[-1]
        is_cf = last.template.is_control_flow
        prime_index = len(piece) - 1 if is_cf else 0
        roles = [BODY_ROLE] * len(piece)
        roles[prime_index] = PRIME_ROLE
        target_pc = static_target(last, start + 4 * (len(piece) - 1))
        block = InstructionBlock(
            instructions=tuple(piece),
            roles=tuple(roles),
            prime_index=prime_index,
            base_address=ctx.next_base_address,
            kind=kind,
            cf_slot=prime_index if is_cf else None,
            branch_target_block=block_of_pc[target_pc] if target_pc is not None else None,
        )
        ctx.add(block, generated=False)
        if target_pc is not None:
            original_targets[len(blocks)] = block_of_pc[target_pc]
        blocks.append(block)

    if head_block:
        original_targets[0] = blocks[0].branch_target_block
    for index, target in original_targets.items():
        block = blocks[index]
        cf = block.instructions[block.cf_slot]
        displacement = blocks[target].base_address - block.address_of(block.cf_slot)
        blocks[index] = block.with_instruction(block.cf_slot, cf.replace(imm=displacement))
        ctx.set_target(index, target)

    return FuzzIteration(
        blocks=blocks,
        control_header=[False] * len(blocks),
        context=ctx,
        data_seed=data_seed,
        memory_overlay=dict(memory_overlay or {}),
    )
