"""Per-module hit bitmaps with N_cov accounting, merge and a binary dump."""

import json
from functools import reduce
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import structlog

from ..serialization import JsonSerializableMixin
from ..validation import ContractError, MergeError, ValidationError
from .mapper import apply_weight_shift

logger = structlog.get_logger(__name__)

MAGIC = b"RVLOOPFUZZ-COV 1\n"


class CoverageMap(JsonSerializableMixin):
    """Hit bitmap of ``2**bits`` points per instrumented module.

    ``n_cov(module)`` always equals the population count of that module's bitmap.
    """

    def __init__(
        self,
        regions: Mapping[str, int],
        weight_shifts: Optional[Mapping[str, int]] = None,
    ):
        self._bits: Dict[str, int] = dict(regions)
        self._bitmaps: Dict[str, np.ndarray] = {
            module: np.zeros(1 << bits, dtype=bool) for module, bits in self._bits.items()
        }
        self._counts: Dict[str, int] = {module: 0 for module in self._bits}
        shifts = weight_shifts or {}
        self.weight_shifts: Dict[str, int] = {m: int(shifts.get(m, 0)) for m in self._bits}

    @property
    def modules(self) -> List[str]:
        return list(self._bits)

    @property
    def layout(self) -> Tuple[Tuple[str, int], ...]:
        return tuple(self._bits.items())

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def size_of(self, module: str) -> int:
        return 1 << self._bits[module]

    def __str__(self) -> str:
        return f"CoverageMap({len(self._bits)} modules, covered={self.total})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoverageMap) or other.layout != self.layout:
            return False
        return all(np.array_equal(self._bitmaps[m], other._bitmaps[m]) for m in self._bits)

    def _bitmap(self, module: str) -> np.ndarray:
        try:
            return self._bitmaps[module]
        except KeyError:
            raise ContractError(f"module {module} is not instrumented", module=module) from None

    def record_hit(self, module: str, index: int) -> bool:
        """Mark a point covered.

        Returns:
            True if the point was not covered before

        Raises:
            ContractError: On an unknown module or an out-of-range index
        """
        bitmap = self._bitmap(module)
        if not 0 <= index < bitmap.size:
            raise ContractError(
                f"index {index} is outside the {bitmap.size}-point map of {module}",
                module=module,
                index=index,
            )
        if bitmap[index]:
            return False
        bitmap[index] = True
        self._counts[module] += 1
        return True

    def is_covered(self, module: str, index: int) -> bool:
        return bool(self._bitmap(module)[index])

    def covered(self, module: str) -> np.ndarray:
        """Covered indices of a module, ascending."""
        return np.flatnonzero(self._bitmap(module))

    def points(self) -> List[Tuple[str, int]]:
        """Every covered (module, index), modules in layout order."""
        return [(m, int(i)) for m in self._bits for i in self.covered(m)]

    def n_cov(self, module: str) -> int:
        self._bitmap(module)
        return self._counts[module]

    def popcount(self, module: str) -> int:
        """Recount from the bitmap."""
        return int(np.count_nonzero(self._bitmap(module)))

    def weighted(self, module: str) -> int:
        return apply_weight_shift(self.n_cov(module), self.weight_shifts[module])

    def feedback_metric(self) -> int:
        """Sum of weight-shifted N_cov over all modules."""
        return sum(self.weighted(m) for m in self._bits)

    def copy(self) -> "CoverageMap":
        clone = CoverageMap(self._bits, self.weight_shifts)
        for module, bitmap in self._bitmaps.items():
            clone._bitmaps[module] = bitmap.copy()
        clone._counts = dict(self._counts)
        return clone

    def merge(self, other: "CoverageMap") -> "CoverageMap":
        """Bitwise OR of two maps with recounted N_cov.

        Raises:
            MergeError: If the module layouts differ
        """
        if other.layout != self.layout:
            raise MergeError(
                "coverage maps have different module layouts",
                hashes=[_layout_key(self.layout), _layout_key(other.layout)],
            )
        merged = self.copy()
        for module in self._bits:
            target = merged._bitmaps[module]
            np.logical_or(target, other._bitmaps[module], out=target)
            merged._counts[module] = merged.popcount(module)
        return merged

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "feedback_metric": self.feedback_metric(),
            "modules": {
                module: {
                    "bits": bits,
                    "n_cov": self._counts[module],
                    "weight_shift": self.weight_shifts[module],
                    "weighted": self.weighted(module),
                }
                for module, bits in self._bits.items()
            },
        }

    def to_bytes(self) -> bytes:
        """Magic line, JSON module table line, then one packed bitmap per module."""
        table = [
            {
                "module": m,
                "bits": b,
                "n_cov": self._counts[m],
                "weight_shift": self.weight_shifts[m],
            }
            for m, b in self._bits.items()
        ]
        header = json.dumps({"modules": table}, sort_keys=True).encode("utf-8") + b"\n"
        payload = b"".join(np.packbits(self._bitmaps[m]).tobytes() for m in self._bits)
        return MAGIC + header + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "CoverageMap":
        """Parse `to_bytes` output.

        Raises:
            ValidationError: On a bad magic line, a short payload or inconsistent counters
        """
        if not data.startswith(MAGIC):
            raise ValidationError("not a coverage map dump", field="magic", value=data[:16])
        newline = data.index(b"\n", len(MAGIC))
        table = json.loads(data[len(MAGIC) : newline].decode("utf-8"))["modules"]
        covmap = cls(
            {row["module"]: row["bits"] for row in table},
            {row["module"]: row["weight_shift"] for row in table},
        )
        cursor = newline + 1
        for row in table:
            points = 1 << row["bits"]
            nbytes = (points + 7) // 8
            chunk = np.frombuffer(data[cursor : cursor + nbytes], dtype=np.uint8)
            if chunk.size != nbytes:
                raise ValidationError("coverage map payload is truncated", field=row["module"])
            covmap._bitmaps[row["module"]] = np.unpackbits(chunk)[:points].astype(bool)
            covmap._counts[row["module"]] = covmap.popcount(row["module"])
            if covmap._counts[row["module"]] != row["n_cov"]:
                raise ValidationError(
                    "stored N_cov disagrees with the bitmap",
                    field=row["module"],
                    value=row["n_cov"],
                )
            cursor += nbytes
        return covmap

    def dump(self, path: Path | str) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(self.to_bytes())
        logger.info("coverage_map_written", path=str(target), covered=self.total)
        return target

    @classmethod
    def load(cls, path: Path | str) -> "CoverageMap":
        return cls.from_bytes(Path(path).read_bytes())


def _layout_key(layout: Iterable[Tuple[str, int]]) -> str:
    return ",".join(f"{m}:{b}" for m, b in layout)


def merge_maps(maps: Iterable[CoverageMap]) -> CoverageMap:
    """OR-merge any number of maps with the same layout."""
    maps = list(maps)
    if not maps:
        raise MergeError("nothing to merge")
    return reduce(CoverageMap.merge, maps[1:], maps[0].copy())
