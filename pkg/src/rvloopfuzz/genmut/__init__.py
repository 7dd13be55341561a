"""Direct-mode generation and mutation of fuzz iterations."""

from .lfsr import TAPS, Lfsr, LfsrState, lfsr_next, taps_mask
from .context import BlockRecord, FuzzIteration, GlobalContext, MemoryPolicy, Mode
from .generator import (
    BRANCH_REACH,
    JUMP_REACH,
    assign_operands,
    block_length,
    choose_mode,
    default_policy,
    expected_jump_distance,
    generate_iteration,
    pick_branch_target,
)
from .mutator import BlockOp, draw_op, mutate_iteration
from .validate import assert_valid_iteration, static_address, validate_iteration
from .dump import dump_iteration, load_iteration, read_iteration, save_iteration
from .program import basic_block_leaders, iteration_from_program, static_target

__all__ = [
    # Randomness
    "TAPS",
    "Lfsr",
    "LfsrState",
    "lfsr_next",
    "taps_mask",
    # Context
    "BlockRecord",
    "FuzzIteration",
    "GlobalContext",
    "MemoryPolicy",
    "Mode",
    # Generation
    "BRANCH_REACH",
    "JUMP_REACH",
    "assign_operands",
    "block_length",
    "choose_mode",
    "default_policy",
    "expected_jump_distance",
    "generate_iteration",
    "pick_branch_target",
    # Mutation
    "BlockOp",
    "draw_op",
    "mutate_iteration",
    # Validation and dumps
    "assert_valid_iteration",
    "static_address",
    "validate_iteration",
    "dump_iteration",
    "load_iteration",
    "read_iteration",
    "save_iteration",
    # Programs
    "basic_block_leaders",
    "iteration_from_program",
    "static_target",
]
