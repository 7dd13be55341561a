"""The configurable instruction library and template selection."""

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import structlog

from ..validation import ConfigurationError
from .templates import (
    AffiliateSpec,
    Category,
    Format,
    InstrTemplate,
    Placement,
    make_slot,
)

logger = structlog.get_logger(__name__)

ALL_CATEGORIES: FrozenSet[Category] = frozenset(Category)


@dataclass(frozen=True)
class InstructionLibrary:
    """Templates plus the per-category enable mask.

    Immutable, so one instance can be shared by every shard of a campaign.
    """

    templates: Tuple[InstrTemplate, ...]
    enabled: FrozenSet[Category] = ALL_CATEGORIES
    _by_mnemonic: Dict[str, InstrTemplate] = field(init=False, repr=False, compare=False)
    _by_opcode: Dict[int, Tuple[InstrTemplate, ...]] = field(
        init=False, repr=False, compare=False
    )
    _pool: Tuple[InstrTemplate, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_mnemonic: Dict[str, InstrTemplate] = {}
        by_opcode: Dict[int, List[InstrTemplate]] = {}
        for template in self.templates:
            if template.mnemonic in by_mnemonic:
                raise ConfigurationError(
                    f"duplicate template {template.mnemonic}", config_key=template.mnemonic
                )
            by_mnemonic[template.mnemonic] = template
            by_opcode.setdefault(template.opcode, []).append(template)
        for template in self.templates:
            for affiliate in template.affiliates:
                if affiliate.template not in by_mnemonic:
                    raise ConfigurationError(
                        f"{template.mnemonic} references unknown affiliate {affiliate.template}",
                        config_key=template.mnemonic,
                    )
        # A template is drawable only when its affiliates are enabled too.
        pool = tuple(
            t
            for t in self.templates
            if t.selectable
            and t.category in self.enabled
            and all(by_mnemonic[a.template].category in self.enabled for a in t.affiliates)
        )
        object.__setattr__(self, "_by_mnemonic", by_mnemonic)
        object.__setattr__(
            self, "_by_opcode", {op: tuple(ts) for op, ts in by_opcode.items()}
        )
        object.__setattr__(self, "_pool", pool)

    def __len__(self) -> int:
        return len(self.templates)

    def __str__(self) -> str:
        cats = ",".join(sorted(c.value for c in self.enabled))
        return f"InstructionLibrary({len(self.templates)} templates, enabled={cats})"

    def get(self, mnemonic: str) -> InstrTemplate:
        try:
            return self._by_mnemonic[mnemonic]
        except KeyError:
            raise ConfigurationError(
                f"unknown mnemonic {mnemonic}", config_key=mnemonic
            ) from None

    def candidates(self, opcode: int) -> Tuple[InstrTemplate, ...]:
        """Templates sharing a major opcode, in declaration order."""
        return self._by_opcode.get(opcode, ())

    @property
    def selectable(self) -> Tuple[InstrTemplate, ...]:
        """Templates the fuzzer may draw under the current mask."""
        return self._pool

    def with_enabled(self, categories: Iterable[Category | str]) -> "InstructionLibrary":
        """Return a copy of the library with a different enable mask."""
        mask = frozenset(Category(c) for c in categories)
        return InstructionLibrary(self.templates, mask)

    def is_enabled(self, template: InstrTemplate) -> bool:
        return template.category in self.enabled


def select_template(library: InstructionLibrary, rand: int) -> InstrTemplate:
    """Select a prime template uniformly among enabled, selectable templates.

    Args:
        library: Instruction library with its enable mask
        rand: Non-negative pseudorandom integer; reduced modulo the pool size

    Returns:
        The selected template

    Raises:
        ConfigurationError: If no category is enabled
    """
    pool = library.selectable
    if not pool:
        raise ConfigurationError(
            "instruction library has no enabled categories", config_key="categories"
        )
    return pool[rand % len(pool)]


def _parse_affiliates(raw: Any, sets: Dict[str, Any]) -> Tuple[AffiliateSpec, ...]:
    if raw is None:
        return ()
    records = sets[raw] if isinstance(raw, str) else raw
    specs = []
    for record in records:
        placement = record["placement"]
        if placement not in (Placement.BEFORE.value, Placement.AFTER.value):
            raise ConfigurationError(
                f"affiliate placement must be before or after, got {placement}",
                config_key="placement",
            )
        specs.append(
            AffiliateSpec(
                template=record["template"],
                placement=Placement(placement),
                role=record["role"],
                operands=tuple(sorted(record.get("operands", {}).items())),
            )
        )
    return tuple(specs)


def parse_library(document: Dict[str, Any]) -> InstructionLibrary:
    """Build a library from a parsed library document."""
    sets = document.get("affiliate_sets", {})
    templates = []
    for record in document["templates"]:
        fmt = Format(record["format"])
        fp_slots = set(record.get("fp", []))
        try:
            templates.append(
                InstrTemplate(
                    mnemonic=record["mnemonic"],
                    category=Category(record["category"]),
                    format=fmt,
                    iclass=record["class"],
                    fixed=tuple(record["fixed"].items()),
                    slots=tuple(
                        make_slot(name, fmt, fp=name in fp_slots) for name in record["slots"]
                    ),
                    affiliates=_parse_affiliates(record.get("affiliates"), sets),
                    selectable=record.get("selectable", True),
                    mem_width=record.get("width", 0),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(
                f"malformed template record {record.get('mnemonic', '?')}",
                config_key="templates",
                cause=exc,
            ) from exc
    return InstructionLibrary(tuple(templates))


def load_library(
    path: Optional[Path | str] = None,
    enabled: Optional[Iterable[Category | str]] = None,
) -> InstructionLibrary:
    """Load an instruction library definition file.

    Args:
        path: Library JSON file; the bundled RV64 library when omitted
        enabled: Categories to enable; all when omitted

    Returns:
        The loaded library
    """
    library = _bundled_library() if path is None else _load_path(Path(path))
    if enabled is not None:
        library = library.with_enabled(enabled)
    return library


def _load_path(path: Path) -> InstructionLibrary:
    with path.open(encoding="utf-8") as handle:
        library = parse_library(json.load(handle))
    logger.info("library_loaded", path=str(path), templates=len(library))
    return library


@lru_cache(maxsize=1)
def _bundled_library() -> InstructionLibrary:
    text = resources.files(__package__).joinpath("data/rv64_library.json").read_text(
        encoding="utf-8"
    )
    return parse_library(json.loads(text))


def default_library() -> InstructionLibrary:
    """The bundled library with every category enabled."""
    return _bundled_library()
