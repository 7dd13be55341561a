"""Encoding and decoding of 32-bit instruction words against a library."""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, Mapping, Optional, Tuple, Union

from ..validation import ArityError, EncodingRangeError
from .library import InstructionLibrary, default_library
from .templates import InstrTemplate

NOP_WORD = 0x00000013


@dataclass(frozen=True)
class Instruction:
    """A template with a complete operand assignment."""

    template: InstrTemplate
    operands: Tuple[Tuple[str, int], ...]

    @classmethod
    def of(cls, template: InstrTemplate, operands: Mapping[str, int]) -> "Instruction":
        ordered = tuple((slot.name, int(operands[slot.name])) for slot in template.slots)
        return cls(template, ordered)

    @property
    def mnemonic(self) -> str:
        return self.template.mnemonic

    @cached_property
    def word(self) -> int:
        return encode(self.template, dict(self.operands))

    def operand(self, name: str, default: Optional[int] = None) -> int:
        for key, value in self.operands:
            if key == name:
                return value
        if default is not None:
            return default
        raise KeyError(f"{self.template.mnemonic} has no operand {name}")

    def as_dict(self) -> Dict[str, int]:
        return dict(self.operands)

    def replace(self, **changes: int) -> "Instruction":
        """Return a copy with some operands replaced."""
        values = self.as_dict()
        values.update(changes)
        return Instruction.of(self.template, values)

    def __str__(self) -> str:
        ops = ", ".join(f"{k}={v}" for k, v in self.operands)
        return f"{self.template.mnemonic} {ops}".rstrip()


@dataclass(frozen=True)
class UnknownWord:
    """A word no library template matches."""

    word: int

    def __str__(self) -> str:
        return f"unknown {self.word:#010x}"


Decoded = Union[Instruction, UnknownWord]


def encode(template: InstrTemplate, operands: Mapping[str, int]) -> int:
    """Encode a template and its operands into a 32-bit word.

    Args:
        template: Instruction template
        operands: Value for every operand slot of the template

    Returns:
        The encoded instruction word

    Raises:
        ArityError: If an operand is missing or not a slot of the template
        EncodingRangeError: If an operand does not fit its field
    """
    missing = [name for name in template.slot_names if name not in operands]
    if missing:
        raise ArityError(
            f"{template.mnemonic} is missing operands {missing}",
            mnemonic=template.mnemonic,
            missing=missing,
        )
    extra = [name for name in operands if not template.has_slot(name)]
    if extra:
        raise ArityError(
            f"{template.mnemonic} has no operand slots {extra}",
            mnemonic=template.mnemonic,
            missing=extra,
        )
    word = template.match
    for slot in template.slots:
        value = operands[slot.name]
        low, high = slot.field.value_range()
        if not low <= value <= high:
            raise EncodingRangeError(
                f"{template.mnemonic}: {slot.name}={value} outside [{low}, {high}]",
                slot=slot.name,
                value=value,
                bits=slot.field.width,
            )
        if value % slot.field.align:
            raise EncodingRangeError(
                f"{template.mnemonic}: {slot.name}={value} must be a multiple of "
                f"{slot.field.align}",
                slot=slot.name,
                value=value,
                bits=slot.field.width,
            )
        word |= slot.field.scatter(value)
    return word


def decode(word: int, library: Optional[InstructionLibrary] = None) -> Decoded:
    """Decode a word; returns `UnknownWord` when no template matches."""
    if library is None:
        return _decode_default(word & 0xFFFFFFFF)
    return _decode_with(word & 0xFFFFFFFF, library)


@lru_cache(maxsize=65536)
def _decode_default(word: int) -> Decoded:
    return _decode_with(word, default_library())


def _decode_with(word: int, library: InstructionLibrary) -> Decoded:
    for template in library.candidates(word & 0x7F):
        if word & template.mask == template.match:
            return Instruction(
                template,
                tuple((slot.name, slot.field.gather(word)) for slot in template.slots),
            )
    return UnknownWord(word)


def is_known(decoded: Decoded) -> bool:
    return isinstance(decoded, Instruction)


def check_format(word: int, library: Optional[InstructionLibrary] = None) -> bool:
    """True when the word decodes to a library template."""
    return is_known(decode(word, library))
