"""Complete simulator snapshots of a lockstep execution.

A snapshot holds, for each core, the architectural state, reservation, data segment,
lane accounting and (for the DUT) shadow registers. The instruction segment is not
stored; its digest pins the snapshot to the iteration it was taken from.

Files are gzip-compressed JSON with a ``version`` field, see docs/FORMATS.md.
"""

import base64
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import structlog

from ..coverage import CoverageMap, Instrumentation
from ..genmut import FuzzIteration
from ..models import HarnessConfig
from ..serialization import JsonSerializableMixin, read_json_document
from ..validation import ContractError
from .bugs import BugSpec
from .lockstep import Execution, Lane
from .memory import build_memory
from .shadow import ShadowState, reset_shadow
from .state import ArchState

logger = structlog.get_logger(__name__)

SNAPSHOT_VERSION = 1


@dataclass
class CoreSnapshot:
    """One core and its lane."""

    state: ArchState
    data: bytes
    pc: int
    reservation: Optional[int] = None
    taken: Dict[int, int] = field(default_factory=dict)
    retired: int = 0
    handler_cost: int = 0
    fuzz_retired: int = 0
    exceptions_handled: int = 0
    retired_pcs: List[int] = field(default_factory=list)
    abandoned_cause: Optional[int] = None
    shadow: Optional[ShadowState] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "state": self.state.to_dict(),
            "data": base64.b64encode(self.data).decode("ascii"),
            "pc": self.pc,
            "reservation": self.reservation,
            "taken": {f"{pc:#x}": count for pc, count in sorted(self.taken.items())},
            "retired": self.retired,
            "handler_cost": self.handler_cost,
            "fuzz_retired": self.fuzz_retired,
            "exceptions_handled": self.exceptions_handled,
            "retired_pcs": sorted(self.retired_pcs),
            "abandoned_cause": self.abandoned_cause,
            "shadow": self.shadow,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CoreSnapshot":
        return cls(
            state=ArchState.from_dict(data["state"]),
            data=base64.b64decode(data["data"]),
            pc=data["pc"],
            reservation=data.get("reservation"),
            taken={int(pc, 16): count for pc, count in data.get("taken", {}).items()},
            retired=data.get("retired", 0),
            handler_cost=data.get("handler_cost", 0),
            fuzz_retired=data.get("fuzz_retired", 0),
            exceptions_handled=data.get("exceptions_handled", 0),
            retired_pcs=list(data.get("retired_pcs", [])),
            abandoned_cause=data.get("abandoned_cause"),
            shadow=data.get("shadow"),
        )


@dataclass
class ArchSnapshot(JsonSerializableMixin):
    """Versioned snapshot of both cores at a step boundary.

    ``ordinal`` is the ordinal of the next step; ``mismatch_ordinal`` is set when the
    snapshot was taken at a divergence.
    """

    ordinal: int
    code_digest: str
    dut: CoreSnapshot
    ref: CoreSnapshot
    mismatch_ordinal: Optional[int] = None
    version: int = SNAPSHOT_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "ordinal": self.ordinal,
            "mismatch_ordinal": self.mismatch_ordinal,
            "code_digest": self.code_digest,
            "dut": self.dut.to_dict(),
            "ref": self.ref.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArchSnapshot":
        """Parse a snapshot document.

        Raises:
            ContractError: If the document has an unsupported version
        """
        version = data.get("version")
        if version != SNAPSHOT_VERSION:
            raise ContractError(f"unsupported snapshot version {version}", version=version)
        return cls(
            ordinal=data["ordinal"],
            code_digest=data["code_digest"],
            dut=CoreSnapshot.from_dict(data["dut"]),
            ref=CoreSnapshot.from_dict(data["ref"]),
            mismatch_ordinal=data.get("mismatch_ordinal"),
        )

    def write(self, path: Path | str) -> Path:
        return self.write_json(path, compress=True)

    @classmethod
    def load(cls, path: Path | str) -> "ArchSnapshot":
        return cls.from_dict(read_json_document(path))

    def __str__(self) -> str:
        return f"ArchSnapshot(ordinal={self.ordinal}, pc={self.dut.pc:#x}, code={self.code_digest[:12]})"


def _core_snapshot(lane: Lane, shadow: Optional[ShadowState]) -> CoreSnapshot:
    return CoreSnapshot(
        state=lane.state.copy(),
        data=bytes(lane.memory.data),
        pc=lane.pc,
        reservation=lane.interp.reservation,
        taken=dict(lane.taken),
        retired=lane.retired,
        handler_cost=lane.handler_cost,
        fuzz_retired=lane.fuzz_retired,
        exceptions_handled=lane.exceptions_handled,
        retired_pcs=sorted(lane.retired_pcs),
        abandoned_cause=lane.abandoned_cause,
        shadow=shadow,
    )


def take_snapshot(execution: Execution) -> ArchSnapshot:
    """Capture both cores of ``execution`` between steps."""
    mismatch = execution.mismatch[0].ordinal if execution.mismatch else None
    return ArchSnapshot(
        ordinal=execution.ordinal,
        code_digest=execution.dut.memory.code_digest(),
        dut=_core_snapshot(execution.dut_lane, execution.dut.shadow.snapshot()),
        ref=_core_snapshot(execution.ref_lane, None),
        mismatch_ordinal=mismatch,
    )


def reset_snapshot(iteration: FuzzIteration, config: Optional[HarnessConfig] = None) -> ArchSnapshot:
    """The canonical snapshot of an iteration before its first step."""
    config = config or HarnessConfig()
    memory = build_memory(iteration, config)
    enabled = [c for c in ("I", "M", "F", "A", "ZiCsr") if c not in config.disabled_extensions]

    def core(shadow: Optional[ShadowState]) -> CoreSnapshot:
        return CoreSnapshot(
            state=ArchState.reset(memory.code_base, enabled),
            data=bytes(memory.data),
            pc=memory.code_base,
            shadow=shadow,
        )

    return ArchSnapshot(
        ordinal=0,
        code_digest=memory.code_digest(),
        dut=core(reset_shadow()),
        ref=core(None),
    )


def _apply(lane: Lane, core: CoreSnapshot, ordinal: int) -> None:
    lane.interp.state = core.state.copy()
    lane.memory.data[:] = core.data
    lane.interp.reservation = core.reservation
    lane.pc = core.pc
    lane.ordinal = ordinal
    lane.taken = dict(core.taken)
    lane.retired = core.retired
    lane.handler_cost = core.handler_cost
    lane.fuzz_retired = core.fuzz_retired
    lane.exceptions_handled = core.exceptions_handled
    lane.retired_pcs = set(core.retired_pcs)
    lane.abandoned_cause = core.abandoned_cause


def restore(
    snapshot: ArchSnapshot,
    iteration: FuzzIteration,
    config: Optional[HarnessConfig] = None,
    instrumentation: Optional[Instrumentation] = None,
    covmap: Optional[CoverageMap] = None,
    bugs: Iterable["BugSpec | str"] = (),
    budget: Optional[int] = None,
    record_traces: bool = False,
) -> Execution:
    """Rebuild an execution that continues exactly where ``snapshot`` was taken.

    Raises:
        ContractError: If the snapshot was taken from a different instruction image
    """
    execution = Execution(
        iteration, config, instrumentation, covmap, bugs, budget, record_traces=record_traces
    )
    digest = execution.dut.memory.code_digest()
    if digest != snapshot.code_digest:
        raise ContractError(
            "snapshot does not belong to this iteration",
            expected=snapshot.code_digest,
            actual=digest,
        )
    _apply(execution.dut_lane, snapshot.dut, snapshot.ordinal)
    _apply(execution.ref_lane, snapshot.ref, snapshot.ordinal)
    if snapshot.dut.shadow is not None:
        execution.dut.shadow.registers = {m: dict(r) for m, r in snapshot.dut.shadow.items()}
    logger.debug("snapshot_restored", ordinal=snapshot.ordinal, pc=snapshot.dut.pc)
    return execution
