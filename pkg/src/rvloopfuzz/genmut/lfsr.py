"""Maximal-length Galois LFSRs, the fuzzer's only source of randomness."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, TypeVar

from ..validation import ConfigurationError, SeedError

T = TypeVar("T")

# Feedback taps of primitive polynomials (Xilinx XAPP052 table).
TAPS: Dict[int, Tuple[int, ...]] = {
    3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6), 8: (8, 6, 5, 4),
    9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1), 13: (13, 4, 3, 1),
    14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4), 17: (17, 14), 18: (18, 11),
    19: (19, 6, 2, 1), 20: (20, 17), 21: (21, 19), 22: (22, 21), 23: (23, 18),
    24: (24, 23, 22, 17), 25: (25, 22), 26: (26, 6, 2, 1), 27: (27, 5, 2, 1),
    28: (28, 25), 29: (29, 27), 30: (30, 6, 4, 1), 31: (31, 28), 32: (32, 22, 2, 1),
    48: (48, 47, 21, 20), 64: (64, 63, 61, 60),
}  # fmt: skip


def taps_mask(taps: Sequence[int]) -> int:
    """Toggle mask of a right-shifting Galois LFSR: bit t-1 set for every tap t."""
    mask = 0
    for tap in taps:
        mask |= 1 << (tap - 1)
    return mask


@dataclass(frozen=True)
class LfsrState:
    """Register contents plus the polynomial it steps with."""

    register: int
    width: int
    taps: Tuple[int, ...]

    @classmethod
    def seeded(cls, seed: int, width: int = 32) -> "LfsrState":
        if width not in TAPS:
            raise ConfigurationError(f"no primitive polynomial for width {width}", config_key="width")
        register = seed & ((1 << width) - 1)
        if register == 0:
            raise SeedError("LFSR seed must be nonzero in the register width", width=width)
        return cls(register, width, TAPS[width])


def lfsr_next(state: LfsrState) -> Tuple[int, LfsrState]:
    """Advance one step.

    Returns:
        (output bit, successor state)

    Raises:
        SeedError: If the state is the absorbing zero state
    """
    register = state.register
    if register == 0:
        raise SeedError("LFSR state is zero", width=state.width)
    bit = register & 1
    register >>= 1
    if bit:
        register ^= taps_mask(state.taps)
    return bit, LfsrState(register, state.width, state.taps)


class Lfsr:
    """Mutable LFSR with helpers for drawing integers, probabilities and choices."""

    def __init__(self, seed: int, width: int = 32):
        state = LfsrState.seeded(seed, width)
        self.width = width
        self.taps = state.taps
        self._mask = taps_mask(state.taps)
        self._register = state.register

    @property
    def state(self) -> LfsrState:
        return LfsrState(self._register, self.width, self.taps)

    @state.setter
    def state(self, value: LfsrState) -> None:
        if value.register == 0:
            raise SeedError("LFSR state is zero", width=value.width)
        self.width = value.width
        self.taps = value.taps
        self._mask = taps_mask(value.taps)
        self._register = value.register

    def next_bit(self) -> int:
        register = self._register
        bit = register & 1
        register >>= 1
        if bit:
            register ^= self._mask
        self._register = register
        return bit

    def next_bits(self, n: int) -> int:
        """Collect ``n`` output bits, first bit least significant."""
        value = 0
        register = self._register
        mask = self._mask
        for i in range(n):
            bit = register & 1
            register >>= 1
            if bit:
                register ^= mask
                value |= 1 << i
        self._register = register
        return value

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ConfigurationError("randbelow needs a positive bound", config_key="n")
        if n == 1:
            return 0
        bits = (n - 1).bit_length()
        while True:
            value = self.next_bits(bits)
            if value < n:
                return value

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return low + self.randbelow(high - low + 1)

    def random(self) -> float:
        """Uniform float in [0, 1) with 32 bits of resolution."""
        return self.next_bits(32) / 4294967296.0

    def chance(self, p: float) -> bool:
        return self.random() < p

    def choice(self, items: Sequence[T]) -> T:
        return items[self.randbelow(len(items))]

    def fill_bytes(self, n: int) -> bytes:
        """Next ``n`` bytes, identical to ``n`` calls of ``next_bits(8)``."""
        outputs, successors = _byte_tables(self._mask)
        register = self._register
        out = bytearray(n)
        for i in range(n):
            low = register & 0xFF
            out[i] = outputs[low]
            register = (register >> 8) ^ successors[low]
        self._register = register
        return bytes(out)

    def sample(self, items: Sequence[T], k: int) -> List[T]:
        """k distinct items, order of draw."""
        pool = list(items)
        picked = []
        for _ in range(min(k, len(pool))):
            picked.append(pool.pop(self.randbelow(len(pool))))
        return picked


@lru_cache(maxsize=16)
def _byte_tables(mask: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    # Eight steps only see the low byte feed back; higher bits just shift down.
    outputs = []
    successors = []
    for low in range(256):
        register = low
        value = 0
        for i in range(8):
            bit = register & 1
            register >>= 1
            if bit:
                register ^= mask
                value |= 1 << i
        outputs.append(value)
        successors.append(register)
    return tuple(outputs), tuple(successors)
