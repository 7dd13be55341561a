"""Mutation mode: per-block generation, deletion or retention of a seed iteration."""

from collections import Counter
from enum import Enum
from typing import Dict, List, Optional, Protocol, Union

import structlog

from ..isa import InstructionBlock, InstructionLibrary, build_block, select_template
from ..models import ModeConfig
from .context import FuzzIteration, GlobalContext, MemoryPolicy
from .generator import (
    BRANCH_REACH,
    JUMP_REACH,
    default_policy,
    nearest_block,
    assign_operands,
)
from .lfsr import Lfsr

logger = structlog.get_logger(__name__)


class BlockOp(str, Enum):
    """Mutation operation applied to one block."""

    GENERATE = "generate"
    DELETE = "delete"
    RETAIN = "retain"


class HasIteration(Protocol):
    iteration: FuzzIteration


def draw_op(cfg: ModeConfig, rand: float) -> BlockOp:
    """Map a uniform draw onto the generate/delete/retain distribution."""
    if rand < cfg.p_gen:
        return BlockOp.GENERATE
    if rand < cfg.p_gen + cfg.p_del:
        return BlockOp.DELETE
    return BlockOp.RETAIN


def mutate_iteration(
    seed: Union[HasIteration, FuzzIteration],
    cfg: ModeConfig,
    coverage_feedback: Optional[float],
    lfsr: Lfsr,
    library: Optional[InstructionLibrary] = None,
    policy: Optional[MemoryPolicy] = None,
) -> FuzzIteration:
    """Derive a new iteration from the surviving blocks of a seed.

    Op probabilities are static; ``coverage_feedback`` is recorded in the log only.
    Deleted blocks stay in the block list with their elimination flag set and their base
    address redirected to the next surviving block. Survivors are laid out contiguously
    and every retained branch is re-encoded against the new layout.
    """
    source = seed if isinstance(seed, FuzzIteration) else seed.iteration
    library = library or source.context.library
    policy = policy or default_policy(cfg)

    old_index: Dict[int, int] = {}
    inputs: List[InstructionBlock] = []
    for index, block in source.surviving():
        old_index[index] = len(inputs)
        inputs.append(block)

    ops = [draw_op(cfg, lfsr.random()) for _ in inputs]
    ctx = GlobalContext(
        library=library, code_base=policy.code_base, block_align=policy.block_align
    )
    laid_out: List[Optional[InstructionBlock]] = [None] * len(inputs)
    for k, (block, op) in enumerate(zip(inputs, ops)):
        if op is BlockOp.DELETE:
            continue
        if op is BlockOp.GENERATE:
            fresh = build_block(select_template(library, lfsr.next_bits(32)), ctx)
            ctx.add(fresh, generated=True, block_id=k)
            laid_out[k] = fresh
        else:
            moved = block.at(ctx.next_base_address)
            ctx.add(moved, generated=False, block_id=k)
            laid_out[k] = moved

    position_of_id = {block_id: position for position, block_id in enumerate(ctx.block_ids)}
    for k, op in enumerate(ops):
        block = laid_out[k]
        if block is None:
            continue
        if op is BlockOp.GENERATE:
            laid_out[k] = assign_operands(block, ctx, policy, lfsr)
        elif block.is_control_flow:
            laid_out[k] = _refit_branch(block, k, source, old_index, ops, ctx, position_of_id, lfsr)

    blocks: List[InstructionBlock] = []
    redirect = ctx.code_boundary
    for k in range(len(inputs) - 1, -1, -1):
        block = laid_out[k]
        if block is None:
            blocks.append(_eliminated(inputs[k], redirect))
        else:
            blocks.append(block)
            redirect = block.base_address
    blocks.reverse()

    mutated = FuzzIteration(
        blocks=blocks,
        control_header=[op is BlockOp.DELETE for op in ops],
        context=ctx,
        data_seed=source.data_seed,
        memory_overlay=dict(source.memory_overlay),
    )
    counts = Counter(op.value for op in ops)
    logger.debug(
        "iteration_mutated",
        generated=counts.get("generate", 0),
        deleted=counts.get("delete", 0),
        retained=counts.get("retain", 0),
        coverage_feedback=coverage_feedback,
    )
    return mutated


def _eliminated(block: InstructionBlock, redirect: int) -> InstructionBlock:
    # Pointer redirection: an eliminated block resolves to the next surviving block.
    return block.at(redirect)


def _refit_branch(
    block: InstructionBlock,
    k: int,
    source: FuzzIteration,
    old_index: Dict[int, int],
    ops: List[BlockOp],
    ctx: GlobalContext,
    position_of_id: Dict[int, int],
    lfsr: Lfsr,
) -> InstructionBlock:
    position = position_of_id[k]
    cf_slot = block.cf_slot if block.cf_slot is not None else block.prime_index
    cf = block.instructions[cf_slot]
    branch_address = block.address_of(cf_slot)
    reach = JUMP_REACH if cf.template.format.value == "J" else BRANCH_REACH

    def encodable(target_position: int) -> bool:
        offset = ctx.block_addresses[target_position] - branch_address
        return -reach <= offset < reach

    target_id = old_index.get(block.branch_target_block)
    if target_id is not None and ops[target_id] is not BlockOp.DELETE:
        target = position_of_id[target_id]
        if not encodable(target):
            target = _random_target(ctx, position, encodable, lfsr)
    else:
        target = _random_target(ctx, position, encodable, lfsr)

    ctx.set_target(position, target)
    offset = ctx.block_addresses[target] - branch_address
    return block.with_instruction(cf_slot, cf.replace(imm=offset)).with_target(
        ctx.block_ids[target]
    )


def _random_target(ctx: GlobalContext, position: int, encodable, lfsr: Lfsr) -> int:
    """Uniform pick from the global block address table."""
    candidates = [p for p in range(ctx.block_count) if p != position and encodable(p)]
    if candidates:
        return candidates[lfsr.randbelow(len(candidates))]
    ctx.record_fallback(position)
    return nearest_block(ctx, position, encodable)
