"""RISC-V instruction templates, encodings, the instruction library and blocks."""

from .fields import FIELDS, FieldSpec, SlotKind
from .templates import (
    AffiliateSpec,
    Category,
    Format,
    InstrTemplate,
    OperandSlot,
    Placement,
)
from .library import (
    InstructionLibrary,
    default_library,
    load_library,
    parse_library,
    select_template,
)
from .encoding import (
    NOP_WORD,
    Decoded,
    Instruction,
    UnknownWord,
    check_format,
    decode,
    encode,
    is_known,
)
from .block import (
    BLOCK_ALIGN,
    INSTRUCTION_ALIGN,
    PRIME_ROLE,
    BlockKind,
    InstructionBlock,
    align_up,
    build_block,
)
from .asm import Assembler, asm, load_immediate, nop, reg

__all__ = [
    # Fields and templates
    "FIELDS",
    "FieldSpec",
    "SlotKind",
    "AffiliateSpec",
    "Category",
    "Format",
    "InstrTemplate",
    "OperandSlot",
    "Placement",
    # Library
    "InstructionLibrary",
    "default_library",
    "load_library",
    "parse_library",
    "select_template",
    # Encoding
    "NOP_WORD",
    "Decoded",
    "Instruction",
    "UnknownWord",
    "check_format",
    "decode",
    "encode",
    "is_known",
    # Blocks
    "BLOCK_ALIGN",
    "INSTRUCTION_ALIGN",
    "PRIME_ROLE",
    "BlockKind",
    "InstructionBlock",
    "align_up",
    "build_block",
    # Assembler helpers
    "Assembler",
    "asm",
    "load_immediate",
    "nop",
    "reg",
]
