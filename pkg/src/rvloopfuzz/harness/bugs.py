"""Catalog of injectable DUT faults.

Each entry pairs an instruction predicate (the mnemonics it applies to) with a hook
that perturbs the DUT at one of three stages:

- ``rounding``: ``hook(ctx, rm) -> rm``; ``rm`` is None when the instruction would trap
- ``effect``: ``hook(ctx, effect) -> effect`` before the effect is committed
- ``trap``: ``hook(ctx, state)`` after the trap handler ran

Hooks only ever receive DUT objects.
"""

import json
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Tuple

import structlog

from ..isa import Instruction
from ..isa.csrs import FLAG_DZ, FLAG_NX, MCAUSE, MINSTRET, RM_DYN, RM_RDN, RM_RNE, RM_RTZ
from ..validation import CatalogError
from .state import MASK64, ArchState
from .traps import BREAKPOINT, ArchTrap

logger = structlog.get_logger(__name__)

STAGES = ("rounding", "effect", "trap")


@dataclass(frozen=True)
class BugContext:
    """What a hook may inspect: the instruction, DUT state and unboxed FP sources."""

    instruction: Instruction
    state: ArchState
    operands: Tuple[int, ...] = ()
    trap: Optional[ArchTrap] = None


Hook = Callable[..., Any]


def _is_zero(bits: int) -> bool:
    return bits & 0x7FFFFFFF == 0


def _is_finite(bits: int) -> bool:
    return (bits >> 23) & 0xFF != 0xFF


def _is_inf(bits: int) -> bool:
    return bits & 0x7FFFFFFF == 0x7F800000


def _is_normal(bits: int) -> bool:
    return 0 < (bits >> 23) & 0xFF < 0xFF


def _zero_by_zero_sets_dz(ctx: BugContext, effect: Any) -> Any:
    a, b = ctx.operands
    if _is_zero(a) and _is_zero(b):
        return replace(effect, fflags=effect.fflags | FLAG_DZ)
    return effect


def _finite_by_inf_sets_nx(ctx: BugContext, effect: Any) -> Any:
    a, b = ctx.operands
    if _is_finite(a) and _is_inf(b):
        return replace(effect, fflags=effect.fflags | FLAG_NX)
    return effect


def _mcause_reads_zero(ctx: BugContext, effect: Any) -> Any:
    if ctx.instruction.operand("csr") != MCAUSE or effect.rd is None:
        return effect
    if ctx.state.csrs[MCAUSE] == 0:
        return effect
    kind, index, _ = effect.rd
    return replace(effect, rd=(kind, index, 0))


def _positive_zero_quotient_negated(ctx: BugContext, effect: Any) -> Any:
    a, b = ctx.operands
    if a == 0 and _is_normal(b) and effect.rd is not None:
        kind, index, value = effect.rd
        return replace(effect, rd=(kind, index, value | 0x80000000))
    return effect


def _rdn_as_rtz(ctx: BugContext, rm: Optional[int]) -> Optional[int]:
    return RM_RTZ if rm == RM_RDN else rm


def _reserved_frm_as_rne(ctx: BugContext, rm: Optional[int]) -> Optional[int]:
    if rm is None and ctx.instruction.operand("rm") == RM_DYN and ctx.state.frm > 4:
        return RM_RNE
    return rm


def _ebreak_not_counted(ctx: BugContext, state: ArchState) -> None:
    if ctx.trap is not None and ctx.trap.cause == BREAKPOINT:
        state.csrs[MINSTRET] = (state.csrs[MINSTRET] - 1) & MASK64


def _never(ctx: BugContext, effect: Any) -> Any:
    return effect


HOOKS: Dict[str, Hook] = {
    "C1": _zero_by_zero_sets_dz,
    "C2": _finite_by_inf_sets_nx,
    "C7": _mcause_reads_zero,
    "C10": _positive_zero_quotient_negated,
    "B1": _rdn_as_rtz,
    "B2": _reserved_frm_as_rne,
    "R1": _ebreak_not_counted,
    "noop": _never,
}


@dataclass(frozen=True)
class BugSpec:
    """A catalog entry: identity, predicate and fault hook."""

    id: str
    description: str
    stage: str
    mnemonics: FrozenSet[str]
    field: str
    hook: Hook

    def applies_to(self, mnemonic: str) -> bool:
        return mnemonic in self.mnemonics

    def __str__(self) -> str:
        return f"BugSpec({self.id}, {self.stage}: {self.description})"


def parse_catalog(document: Dict[str, Any]) -> Dict[str, BugSpec]:
    """Build specs from a catalog document; every entry needs a registered hook.

    Raises:
        CatalogError: On an entry without a hook or with an unknown stage
    """
    catalog: Dict[str, BugSpec] = {}
    for record in document["bugs"]:
        bug_id = record["id"]
        if bug_id not in HOOKS:
            raise CatalogError(f"bug {bug_id} has no registered hook", bug_id=bug_id)
        if record["stage"] not in STAGES:
            raise CatalogError(f"bug {bug_id} has unknown stage {record['stage']}", bug_id=bug_id)
        catalog[bug_id] = BugSpec(
            id=bug_id,
            description=record["description"],
            stage=record["stage"],
            mnemonics=frozenset(record["mnemonics"]),
            field=record["field"],
            hook=HOOKS[bug_id],
        )
    return catalog


@lru_cache(maxsize=1)
def load_catalog() -> Dict[str, BugSpec]:
    """The bundled bug catalog."""
    text = resources.files(__package__).joinpath("data/bugs.json").read_text(encoding="utf-8")
    return parse_catalog(json.loads(text))


def catalog_ids() -> List[str]:
    return list(load_catalog())


def get_bug(bug_id: str) -> BugSpec:
    """Look up a catalog entry.

    Raises:
        CatalogError: If the id is not in the catalog
    """
    catalog = load_catalog()
    if bug_id not in catalog:
        raise CatalogError(f"unknown bug id {bug_id}", bug_id=bug_id)
    return catalog[bug_id]


def inject_bug(dut: Any, bug: "BugSpec | str") -> Any:
    """Register a fault on a DUT core and return the core."""
    spec = get_bug(bug) if isinstance(bug, str) else bug
    dut.bugs.append(spec)
    logger.debug("bug_injected", bug=spec.id, stage=spec.stage)
    return dut
