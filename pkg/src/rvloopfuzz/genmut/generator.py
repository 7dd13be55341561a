"""Direct-mode generation: block structure first, then operand assignment."""

from bisect import bisect_left
from typing import Callable, Dict, List, Optional, Tuple

import structlog

from ..isa import (
    PRIME_ROLE,
    Instruction,
    InstructionBlock,
    InstructionLibrary,
    SlotKind,
    build_block,
    select_template,
)
from ..isa.csrs import FUZZ_CSRS, RM_DYN, VALID_RM
from ..isa.templates import InstrTemplate
from ..models import HarnessConfig, ModeConfig
from ..validation import DomainError
from .context import FuzzIteration, GlobalContext, MemoryPolicy, Mode
from .lfsr import Lfsr

logger = structlog.get_logger(__name__)

# Reach of the two pc-relative formats, in bytes.
BRANCH_REACH = 1 << 12
JUMP_REACH = 1 << 20

# Immediate offsets memory primes use; the base register absorbs the rest.
MEM_OFFSET_RANGE = (-256, 255)

READ_CLASSES = frozenset({"load", "fp_load", "lr"})
MISALIGNABLE_CLASSES = frozenset({"load", "store", "fp_load", "fp_store"})


def choose_mode(cfg: ModeConfig, rand: float) -> Mode:
    """Mutation when ``rand`` (uniform in [0, 1)) falls below ``p_mutation``."""
    return Mode.MUTATION if rand < cfg.p_mutation else Mode.DIRECT


def expected_jump_distance(p: int, L: int) -> float:
    """Mean distance of a jump from position ``p`` to a uniform forward target before ``L``."""
    if p < 1 or p > L:
        raise DomainError("position must satisfy 1 <= p <= L", p=p, L=L)
    return (1 + (L - p)) / 2


def block_length(template: InstrTemplate) -> int:
    return 1 + len(template.affiliates)


def generate_iteration(
    cfg: ModeConfig,
    library: InstructionLibrary,
    lfsr: Lfsr,
    policy: Optional[MemoryPolicy] = None,
) -> FuzzIteration:
    """Generate an iteration of ``cfg.instructions_per_iteration`` instructions.

    The last block is drawn among templates that still fit, so the count is met exactly
    whenever the library has a standalone template.
    """
    policy = policy or default_policy(cfg)
    ctx = GlobalContext(
        library=library, code_base=policy.code_base, block_align=policy.block_align
    )
    blocks: List[InstructionBlock] = []
    target = cfg.instructions_per_iteration

    while ctx.cumulative_count < target:
        remaining = target - ctx.cumulative_count
        template = select_template(library, lfsr.next_bits(32))
        if block_length(template) > remaining:
            fitting = [t for t in library.selectable if block_length(t) <= remaining]
            if fitting:
                template = fitting[lfsr.randbelow(len(fitting))]
        block = build_block(template, ctx)
        ctx.add(block, generated=True)
        blocks.append(block)

    for position, block in enumerate(blocks):
        blocks[position] = assign_operands(block, ctx, policy, lfsr)

    iteration = FuzzIteration(
        blocks=blocks,
        control_header=[False] * len(blocks),
        context=ctx,
        data_seed=lfsr.next_bits(32) | 1,
    )
    logger.debug(
        "iteration_generated",
        blocks=len(blocks),
        instructions=ctx.final_count,
        fallbacks=len(ctx.fallbacks),
    )
    return iteration


def default_policy(cfg: ModeConfig) -> MemoryPolicy:
    return MemoryPolicy.from_configs(cfg, HarnessConfig())


def pick_branch_target(
    ctx: GlobalContext,
    current_block: int,
    jump_range: Optional[int],
    lfsr: Lfsr,
    branch_slot: int = 0,
    reach: int = BRANCH_REACH,
) -> Tuple[int, int]:
    """Choose a target block for the control-flow instruction of ``current_block``.

    With a ``jump_range`` the target lies within that many blocks on either side. Without
    one it is uniform over the blocks after the current one. Targets must be encodable
    from the branch instruction. When nothing qualifies, the nearest other block is used
    and the fallback is recorded in the context.

    Returns:
        (target position, encoded pc-relative offset)
    """
    count = ctx.block_count
    branch_address = ctx.block_addresses[current_block] + 4 * branch_slot

    def encodable(position: int) -> bool:
        offset = ctx.block_addresses[position] - branch_address
        return -reach <= offset < reach

    if jump_range is None:
        low, high = current_block + 1, count - 1
    else:
        low, high = max(0, current_block - jump_range), min(count - 1, current_block + jump_range)
    # Addresses are increasing, so the encodable positions form one interval.
    low = max(low, bisect_left(ctx.block_addresses, branch_address - reach))
    high = min(high, bisect_left(ctx.block_addresses, branch_address + reach) - 1)
    size = high - low + 1
    skip_current = low <= current_block <= high
    if skip_current:
        size -= 1

    if size > 0:
        target = low + lfsr.randbelow(size)
        if skip_current and target >= current_block:
            target += 1
    else:
        target = nearest_block(ctx, current_block, encodable)
        ctx.record_fallback(current_block)
    ctx.set_target(current_block, target)
    return target, ctx.block_addresses[target] - branch_address


def nearest_block(ctx: GlobalContext, current: int, encodable: Callable[[int], bool]) -> int:
    for distance in range(1, ctx.block_count):
        for position in (current + distance, current - distance):
            if 0 <= position < ctx.block_count and encodable(position):
                return position
    return current


def assign_operands(
    block: InstructionBlock,
    ctx: GlobalContext,
    fuzz_ctx: MemoryPolicy,
    lfsr: Lfsr,
) -> InstructionBlock:
    """Fill the placeholder operands of a freshly built block."""
    position = ctx.position_of(block.base_address)
    prime = block.prime.template
    operands = _random_operands(prime, fuzz_ctx, lfsr)
    updated: Dict[int, Instruction] = {}

    if prime.is_memory:
        updated.update(_memory_operands(block, ctx, fuzz_ctx, lfsr, operands))
    elif prime.iclass == "csr":
        sink = block.role_index("csr_sink")
        if sink is not None:
            rd = operands["rd"]
            updated[sink] = block.instructions[sink].replace(rd=lfsr.randbelow(32), rs1=rd)

    setup = block.role_index("frm_setup")
    if setup is not None:
        if lfsr.chance(fuzz_ctx.p_invalid_frm):
            uimm = lfsr.randint(5, 7)
        else:
            uimm = lfsr.choice(VALID_RM)
        updated[setup] = block.instructions[setup].replace(uimm=uimm)

    if block.is_control_flow:
        reach = JUMP_REACH if prime.format.value == "J" else BRANCH_REACH
        target, offset = pick_branch_target(
            ctx, position, fuzz_ctx.jump_range, lfsr, branch_slot=block.prime_index, reach=reach
        )
        operands["imm"] = offset
        block = block.with_target(ctx.block_ids[target])

    updated[block.prime_index] = Instruction.of(prime, operands)
    for slot, instruction in updated.items():
        block = block.with_instruction(slot, instruction)
    return block


def _random_operands(
    template: InstrTemplate, fuzz_ctx: MemoryPolicy, lfsr: Lfsr
) -> Dict[str, int]:
    values: Dict[str, int] = {}
    for slot in template.slots:
        kind = slot.kind
        if kind is SlotKind.RM:
            values[slot.name] = (
                RM_DYN if lfsr.chance(fuzz_ctx.p_dynamic_rm) else lfsr.choice(VALID_RM)
            )
        elif kind is SlotKind.CSR:
            values[slot.name] = lfsr.choice(FUZZ_CSRS)
        else:
            low, high = slot.field.value_range()
            align = slot.field.align
            values[slot.name] = lfsr.randint(low // align, high // align) * align
    return values


def _memory_operands(
    block: InstructionBlock,
    ctx: GlobalContext,
    fuzz_ctx: MemoryPolicy,
    lfsr: Lfsr,
    operands: Dict[str, int],
) -> Dict[int, Instruction]:
    prime = block.prime.template
    width = prime.mem_width or 4
    iclass = prime.iclass

    if iclass in READ_CLASSES and not lfsr.chance(fuzz_ctx.p_data_region):
        region_base, region_size = ctx.code_base, ctx.code_boundary - ctx.code_base
    else:
        region_base, region_size = fuzz_ctx.data_base, fuzz_ctx.data_size
    address = region_base + lfsr.randbelow(max(1, region_size // width)) * width
    if (
        iclass in MISALIGNABLE_CLASSES
        and width > 1
        and lfsr.chance(fuzz_ctx.p_misaligned)
    ):
        # Stay inside the region.
        address = min(address + lfsr.randint(1, width - 1), region_base + region_size - width)

    base_reg = lfsr.randint(1, 31)
    operands["rs1"] = base_reg
    if prime.has_slot("imm"):
        imm = lfsr.randint(*MEM_OFFSET_RANGE)
        operands["imm"] = imm
    else:
        imm = 0
    base = address - imm

    lo = _sext12(base)
    hi = ((base - lo) >> 12) & 0xFFFFF
    updated: Dict[int, Instruction] = {}
    for slot, role in enumerate(block.roles):
        instruction = block.instructions[slot]
        if role == "addr_hi":
            updated[slot] = instruction.replace(rd=base_reg, imm=hi)
        elif role == "addr_lo":
            updated[slot] = instruction.replace(rd=base_reg, rs1=base_reg, imm=lo)
        elif role == "reserve":
            rd = lfsr.randint(1, 31)
            if rd == base_reg:
                rd = rd % 31 + 1
            updated[slot] = instruction.replace(rd=rd, rs1=base_reg)
        elif role != PRIME_ROLE:
            updated[slot] = instruction
    return updated


def _sext12(value: int) -> int:
    low = value & 0xFFF
    return low - 0x1000 if low & 0x800 else low
