"""Instruction templates: fixed encoding bits plus operand slots."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from ..validation import ConfigurationError
from .fields import FIELDS, IMM_FIELD_BY_FORMAT, FieldSpec, SlotKind


class Category(str, Enum):
    """ISA subset a template belongs to."""

    I = "I"  # noqa: E741
    M = "M"
    F = "F"
    A = "A"
    ZICSR = "ZiCsr"


class Format(str, Enum):
    """Base instruction format."""

    R = "R"
    I = "I"  # noqa: E741
    S = "S"
    B = "B"
    U = "U"
    J = "J"
    R4 = "R4"


class Placement(str, Enum):
    """Where an affiliated instruction sits relative to the prime."""

    BEFORE = "before"
    AFTER = "after"


# Instruction classes. They drive operand assignment, the shadow model and prevalence.
CONTROL_FLOW_CLASSES = frozenset({"branch", "jump"})
MEMORY_CLASSES = frozenset({"load", "store", "amo", "lr", "sc", "fp_load", "fp_store"})
STORE_CLASSES = frozenset({"store", "fp_store", "amo", "sc"})


@dataclass(frozen=True)
class OperandSlot:
    """An operand position of a template."""

    name: str
    field: FieldSpec
    fp: bool = False

    @property
    def kind(self) -> SlotKind:
        return self.field.kind


@dataclass(frozen=True)
class AffiliateSpec:
    """Reference to a prerequisite or follow-up template."""

    template: str
    placement: Placement
    role: str
    operands: Tuple[Tuple[str, int], ...] = ()


@dataclass(frozen=True, eq=False)
class InstrTemplate:
    """One instruction of the library.

    Equality and hashing use the mnemonic, which is unique within a library.
    """

    mnemonic: str
    category: Category
    format: Format
    iclass: str
    fixed: Tuple[Tuple[str, int], ...]
    slots: Tuple[OperandSlot, ...]
    affiliates: Tuple[AffiliateSpec, ...] = ()
    selectable: bool = True
    mem_width: int = 0
    mask: int = field(init=False, repr=False)
    match: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        covered = 0
        match = 0
        for name, value in self.fixed:
            spec = FIELDS[name]
            if covered & spec.word_mask:
                raise ConfigurationError(
                    f"{self.mnemonic}: field {name} overlaps another field",
                    config_key=self.mnemonic,
                )
            covered |= spec.word_mask
            match |= spec.scatter(value)
        for slot in self.slots:
            if covered & slot.field.word_mask:
                raise ConfigurationError(
                    f"{self.mnemonic}: slot {slot.name} overlaps another field",
                    config_key=self.mnemonic,
                )
            covered |= slot.field.word_mask
        if covered != 0xFFFFFFFF:
            raise ConfigurationError(
                f"{self.mnemonic}: fields leave bits {~covered & 0xFFFFFFFF:#010x} uncovered",
                config_key=self.mnemonic,
            )
        fixed_mask = 0
        for name, _ in self.fixed:
            fixed_mask |= FIELDS[name].word_mask
        object.__setattr__(self, "mask", fixed_mask)
        object.__setattr__(self, "match", match)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InstrTemplate) and other.mnemonic == self.mnemonic

    def __hash__(self) -> int:
        return hash(self.mnemonic)

    def __str__(self) -> str:
        return f"InstrTemplate({self.mnemonic}, {self.category.value}, {self.format.value})"

    @property
    def opcode(self) -> int:
        return self.fixed_value("opcode") or 0

    @property
    def slot_names(self) -> Tuple[str, ...]:
        return tuple(slot.name for slot in self.slots)

    @property
    def is_control_flow(self) -> bool:
        return self.iclass in CONTROL_FLOW_CLASSES

    @property
    def is_memory(self) -> bool:
        return self.iclass in MEMORY_CLASSES

    @property
    def writes_memory(self) -> bool:
        return self.iclass in STORE_CLASSES

    def fixed_value(self, name: str) -> Optional[int]:
        for field_name, value in self.fixed:
            if field_name == name:
                return value
        return None

    def slot(self, name: str) -> OperandSlot:
        for slot in self.slots:
            if slot.name == name:
                return slot
        raise KeyError(f"{self.mnemonic} has no operand slot {name}")

    def has_slot(self, name: str) -> bool:
        return any(slot.name == name for slot in self.slots)

    def default_operands(self) -> Dict[str, int]:
        """Zero-valued operands, the placeholder used before operand assignment."""
        return {slot.name: 0 for slot in self.slots}


def make_slot(name: str, fmt: Format, fp: bool = False) -> OperandSlot:
    """Build the operand slot called ``name`` for a template of format ``fmt``."""
    if name == "imm":
        field_name = IMM_FIELD_BY_FORMAT.get(fmt.value)
        if field_name is None:
            raise ConfigurationError(f"format {fmt.value} has no immediate", config_key="imm")
    else:
        field_name = name
    if field_name not in FIELDS:
        raise ConfigurationError(f"unknown operand slot {name}", config_key=name)
    return OperandSlot(name=name, field=FIELDS[field_name], fp=fp)
