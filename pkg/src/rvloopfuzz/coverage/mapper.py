"""Coverage index mappers: how control-register values become a bitmap index.

Two schemes are supported:

* legacy: every register gets a random left shift inside the index width, is
  zero-padded and truncated to ``max_state_size`` bits, and the shifted values
  are XOR-combined. Overlapping shifts alias states and leave some indices
  unreachable.
* sequential: registers are laid end to end in declaration order. Each offset
  follows ``new_offset = (last_offset + width) % max_state_size``; bits that run
  past the top of the index wrap to bit 0 and are XOR-folded in, so every
  source bit stays influential and the image covers the whole index space.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import structlog

from ..models import MAX_WEIGHT_SHIFT, MapperScheme
from ..validation import BoundError, ConfigurationError, ContractError
from .netlist import Register

logger = structlog.get_logger(__name__)

# Largest control state `reachable_points` enumerates exhaustively.
ENUMERATION_LIMIT_BITS = 24
_CHUNK_BITS = 20

RegisterValues = Union[Mapping[str, int], Sequence[int]]


class ShiftSource(Protocol):
    def randbelow(self, n: int) -> int: ...


@dataclass(frozen=True)
class RegisterPlacement:
    """Where one control register lands: a shift (legacy) or an offset (sequential)."""

    register: str
    width: int
    position: int


@dataclass(frozen=True)
class CoverageMapper:
    """Index construction for one instrumented module."""

    scheme: MapperScheme
    max_state_size: int
    placements: Tuple[RegisterPlacement, ...]
    weight_shift: int = 0

    @property
    def size(self) -> int:
        return 1 << self.max_state_size

    @property
    def mask(self) -> int:
        return self.size - 1

    @property
    def total_width(self) -> int:
        return sum(p.width for p in self.placements)

    @property
    def registers(self) -> List[str]:
        return [p.register for p in self.placements]

    def __str__(self) -> str:
        layout = ", ".join(f"{p.register}:{p.width}@{p.position}" for p in self.placements)
        return f"CoverageMapper({self.scheme.value}, M={self.max_state_size}, [{layout}])"

    def _place(self, value, placement: RegisterPlacement):
        """Works on ints and on numpy uint64 arrays alike."""
        shifted = value << placement.position
        if self.scheme is MapperScheme.LEGACY:
            return shifted & self.mask
        return (shifted & self.mask) ^ (shifted >> self.max_state_size)

    def index(self, values: RegisterValues) -> int:
        """Coverage index of one register assignment.

        Raises:
            ContractError: If a value is missing or does not fit its register's width
        """
        ordered = self._ordered(values)
        index = 0
        for placement, value in zip(self.placements, ordered):
            index ^= self._place(value, placement)
        return index

    def index_array(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        """Vectorized `index` over columns of register values (uint64)."""
        index = np.zeros(len(columns[0]) if columns else 1, dtype=np.uint64)
        for placement, column in zip(self.placements, columns):
            index ^= self._place(column, placement)
        return index

    def _ordered(self, values: RegisterValues) -> List[int]:
        if isinstance(values, Mapping):
            missing = [r for r in self.registers if r not in values]
            if missing:
                raise ContractError("register values missing", registers=missing)
            ordered = [int(values[r]) for r in self.registers]
        else:
            ordered = [int(v) for v in values]
            if len(ordered) != len(self.placements):
                raise ContractError(
                    "register value count does not match the mapper",
                    expected=len(self.placements),
                    got=len(ordered),
                )
        for placement, value in zip(self.placements, ordered):
            if not 0 <= value < (1 << placement.width):
                raise ContractError(
                    f"value does not fit {placement.width}-bit register {placement.register}",
                    register=placement.register,
                    value=value,
                )
        return ordered


def _check_state_size(max_state_size: int) -> None:
    if max_state_size <= 0 or max_state_size > ENUMERATION_LIMIT_BITS:
        raise ConfigurationError(
            f"max_state_size must be within 1..{ENUMERATION_LIMIT_BITS}",
            config_key="coverage.max_state_size",
        )


def legacy_shift_range(width: int, max_state_size: int) -> int:
    """Largest legacy shift that keeps a register inside the index."""
    return max_state_size - min(width, max_state_size)


def build_mapper_legacy(
    regs: Sequence[Register],
    max_state_size: int,
    rng: Optional[ShiftSource] = None,
    shifts: Optional[Sequence[int]] = None,
    weight_shift: int = 0,
) -> CoverageMapper:
    """Random-shift XOR mapper.

    Args:
        regs: Control registers in declaration order
        max_state_size: Index width in bits
        rng: Draws the shifts; required unless ``shifts`` is given
        shifts: Explicit shifts, one per register
        weight_shift: N_cov weight shift carried for the owning module

    Raises:
        ConfigurationError: On a bad index width, missing rng, or out-of-range shifts
    """
    _check_state_size(max_state_size)
    if shifts is None:
        if rng is None:
            raise ConfigurationError("legacy mapper needs an rng or explicit shifts", config_key="rng")
        shifts = [rng.randbelow(legacy_shift_range(r.width, max_state_size) + 1) for r in regs]
    if len(shifts) != len(regs):
        raise ConfigurationError("one shift per register is required", config_key="shifts")
    placements = []
    for reg, shift in zip(regs, shifts):
        if not 0 <= shift <= legacy_shift_range(reg.width, max_state_size):
            raise ConfigurationError(
                f"shift {shift} of {reg.name} is outside the allowed range",
                config_key=reg.name,
            )
        placements.append(RegisterPlacement(reg.name, reg.width, shift))
    return CoverageMapper(MapperScheme.LEGACY, max_state_size, tuple(placements), weight_shift)


def sequential_offsets(widths: Sequence[int], max_state_size: int) -> List[int]:
    """Offsets from ``new_offset = (last_offset + width) % max_state_size``, starting at 0."""
    offsets = []
    offset = 0
    for width in widths:
        offsets.append(offset)
        offset = (offset + width) % max_state_size
    return offsets


def build_mapper_sequential(
    regs: Sequence[Register],
    max_state_size: int,
    weight_shift: int = 0,
) -> CoverageMapper:
    """Deterministic end-to-end mapper.

    Raises:
        ConfigurationError: If a single register is wider than the index
    """
    _check_state_size(max_state_size)
    for reg in regs:
        if reg.width > max_state_size:
            raise ConfigurationError(
                f"register {reg.name} ({reg.width} bits) does not fit a "
                f"{max_state_size}-bit index",
                config_key=reg.name,
            )
    offsets = sequential_offsets([r.width for r in regs], max_state_size)
    placements = tuple(
        RegisterPlacement(reg.name, reg.width, offset) for reg, offset in zip(regs, offsets)
    )
    return CoverageMapper(MapperScheme.SEQUENTIAL, max_state_size, placements, weight_shift)


def build_mapper(
    scheme: MapperScheme,
    regs: Sequence[Register],
    max_state_size: int,
    rng: Optional[ShiftSource] = None,
    weight_shift: int = 0,
) -> CoverageMapper:
    if MapperScheme(scheme) is MapperScheme.LEGACY:
        return build_mapper_legacy(regs, max_state_size, rng, weight_shift=weight_shift)
    return build_mapper_sequential(regs, max_state_size, weight_shift)


def coverage_index(mapper: CoverageMapper, values: RegisterValues) -> int:
    """Index in ``[0, 2**max_state_size)`` for a register assignment."""
    return mapper.index(values)


def reachable_indices(
    mapper: CoverageMapper, limit_bits: int = ENUMERATION_LIMIT_BITS
) -> np.ndarray:
    """Boolean image of the mapper over every register value combination.

    Raises:
        BoundError: If the control state exceeds ``limit_bits``
    """
    total = mapper.total_width
    if total > limit_bits:
        raise BoundError(
            f"{total}-bit control state is too large to enumerate",
            state_bits=total,
            limit_bits=limit_bits,
        )
    seen = np.zeros(mapper.size, dtype=bool)
    starts = np.cumsum([0] + [p.width for p in mapper.placements[:-1]]).astype(np.uint64)
    chunk = 1 << min(total, _CHUNK_BITS)
    for low in range(0, 1 << total, chunk):
        states = np.arange(low, low + chunk, dtype=np.uint64)
        columns = [
            (states >> start) & np.uint64((1 << p.width) - 1)
            for start, p in zip(starts, mapper.placements)
        ]
        seen[mapper.index_array(columns)] = True
    return seen


def reachable_points(mapper: CoverageMapper, limit_bits: int = ENUMERATION_LIMIT_BITS) -> int:
    """Exact number of distinct indices the mapper can produce."""
    return int(np.count_nonzero(reachable_indices(mapper, limit_bits)))


def instrumented_points(mapper: CoverageMapper) -> int:
    """Points the mapper nominally instruments: ``2**min(total width, max_state_size)``."""
    return 1 << min(mapper.total_width, mapper.max_state_size)


def unreachable_points(mapper: CoverageMapper) -> int:
    return instrumented_points(mapper) - reachable_points(mapper)


def apply_weight_shift(n_cov: int, shift: int, bound: int = MAX_WEIGHT_SHIFT) -> int:
    """Scale N_cov by ``2**shift``; negative shifts floor-divide.

    Raises:
        ContractError: If ``shift`` exceeds the configured bound
    """
    if abs(shift) > bound:
        raise ContractError(f"weight shift must be within +-{bound}", shift=shift)
    return n_cov << shift if shift >= 0 else n_cov >> -shift


def mapper_summary(mapper: CoverageMapper) -> Dict[str, object]:
    """Reachability figures for reports and the ``instrument`` command."""
    instrumented = instrumented_points(mapper)
    reachable = reachable_points(mapper)
    return {
        "scheme": mapper.scheme.value,
        "max_state_size": mapper.max_state_size,
        "registers": [
            {"name": p.register, "width": p.width, "position": p.position}
            for p in mapper.placements
        ],
        "total_width": mapper.total_width,
        "instrumented": instrumented,
        "reachable": reachable,
        "unreachable": instrumented - reachable,
    }
