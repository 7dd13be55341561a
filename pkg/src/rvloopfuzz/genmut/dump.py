"""Lossless binary dump of fuzz iterations.

Layout::

    RVLOOPFUZZ-ITER 1\\n
    <JSON header>\\n
    <little-endian uint32 words of every block, eliminated ones included>

The header carries counts, the block alignment, the data seed, elimination flags, the block table and the
context records. Words are decoded back against the instruction library on load.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..isa import (
    BlockKind,
    Instruction,
    InstructionBlock,
    InstructionLibrary,
    decode,
    default_library,
)
from ..validation import ValidationError
from .context import BlockRecord, FuzzIteration, GlobalContext

MAGIC = b"RVLOOPFUZZ-ITER 1\n"
# Dumps without a block_align key were laid out on 16-byte bases.
LEGACY_BLOCK_ALIGN = 16


def dump_iteration(iteration: FuzzIteration) -> bytes:
    ctx = iteration.context
    header: Dict[str, Any] = {
        "data_seed": iteration.data_seed,
        "instruction_count": iteration.instruction_count,
        "code_base": ctx.code_base,
        "block_align": ctx.block_align,
        "eliminated": [bool(flag) for flag in iteration.control_header],
        "blocks": [
            {
                "base": block.base_address,
                "length": block.length,
                "kind": block.kind.value,
                "roles": list(block.roles),
                "prime_index": block.prime_index,
                "cf_slot": block.cf_slot,
                "target": block.branch_target_block,
            }
            for block in iteration.blocks
        ],
        "records": [[r.iclass, r.generated, r.target] for r in ctx.records],
        "block_ids": list(ctx.block_ids),
        "fallbacks": list(ctx.fallbacks),
        "memory_overlay": {str(addr): value for addr, value in iteration.memory_overlay.items()},
    }
    words = [word for block in iteration.blocks for word in block.words]
    payload = np.asarray(words, dtype="<u4").tobytes()
    return MAGIC + json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + payload


def load_iteration(data: bytes, library: Optional[InstructionLibrary] = None) -> FuzzIteration:
    """Inverse of `dump_iteration`.

    Raises:
        ValidationError: If the data is not an iteration dump or is truncated
    """
    library = library or default_library()
    if not data.startswith(MAGIC):
        raise ValidationError("not an iteration dump", field="magic")
    end = data.index(b"\n", len(MAGIC))
    header = json.loads(data[len(MAGIC) : end].decode("utf-8"))
    words = np.frombuffer(data[end + 1 :], dtype="<u4")
    expected = sum(entry["length"] for entry in header["blocks"])
    if len(words) != expected:
        raise ValidationError(
            f"dump holds {len(words)} words, block table needs {expected}", field="words"
        )

    blocks: List[InstructionBlock] = []
    cursor = 0
    for entry in header["blocks"]:
        instructions = []
        for word in words[cursor : cursor + entry["length"]]:
            decoded = decode(int(word), library)
            if not isinstance(decoded, Instruction):
                raise ValidationError(f"undecodable word {int(word):#010x}", field="words")
            instructions.append(decoded)
        cursor += entry["length"]
        blocks.append(
            InstructionBlock(
                instructions=tuple(instructions),
                roles=tuple(entry["roles"]),
                prime_index=entry["prime_index"],
                base_address=entry["base"],
                kind=BlockKind(entry["kind"]),
                cf_slot=entry["cf_slot"],
                branch_target_block=entry["target"],
            )
        )

    eliminated = header["eliminated"]
    ctx = GlobalContext(
        library=library,
        code_base=header["code_base"],
        block_align=header.get("block_align", LEGACY_BLOCK_ALIGN),
    )
    survivors = [block for block, flag in zip(blocks, eliminated) if not flag]
    for block, block_id, record in zip(survivors, header["block_ids"], header["records"]):
        position = ctx.add(block, generated=record[1], block_id=block_id)
        ctx.records[position] = BlockRecord(record[0], record[1], record[2])
    ctx.fallbacks.extend(header["fallbacks"])

    return FuzzIteration(
        blocks=blocks,
        control_header=list(eliminated),
        context=ctx,
        data_seed=header["data_seed"],
        memory_overlay={int(addr): value for addr, value in header["memory_overlay"].items()},
    )


def save_iteration(iteration: FuzzIteration, path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(dump_iteration(iteration))
    return target


def read_iteration(path: Path | str, library: Optional[InstructionLibrary] = None) -> FuzzIteration:
    return load_iteration(Path(path).read_bytes(), library)
