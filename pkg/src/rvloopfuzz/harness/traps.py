"""Trap causes, exception templates and the shared trap handler."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import structlog

from ..isa.csrs import MCAUSE, MEPC, RM_DYN
from .state import ArchState

logger = structlog.get_logger(__name__)

# mcause values (synchronous exceptions, machine mode)
INSTRUCTION_MISALIGNED = 0
INSTRUCTION_ACCESS_FAULT = 1
ILLEGAL_INSTRUCTION = 2
BREAKPOINT = 3
LOAD_MISALIGNED = 4
LOAD_ACCESS_FAULT = 5
STORE_MISALIGNED = 6
STORE_ACCESS_FAULT = 7
ECALL_M = 11

# Why an illegal-instruction trap was raised.
REASON_UNKNOWN = "unknown"
REASON_FRM = "frm"
REASON_RM = "rm"
REASON_DISABLED = "disabled"
REASON_CSR = "csr"


class ArchTrap(Exception):
    """Architectural trap signalled from inside an interpreter step.

    This is control flow, not an error: the lockstep driver turns it into a trap
    record and consults the exception templates.
    """

    def __init__(self, cause: int, reason: str = "", tval: int = 0):
        super().__init__(cause, reason, tval)
        self.cause = cause
        self.reason = reason
        self.tval = tval

    def __repr__(self) -> str:
        return f"ArchTrap(cause={self.cause}, reason={self.reason!r}, tval={self.tval:#x})"


class Resume(str, Enum):
    """Where execution continues after a template fixed a trap."""

    REPLAY = "replay"
    REALIGN = "realign"
    NEXT = "next"


class HandlerOutcome(str, Enum):
    RESUMED = "resumed"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class ExceptionTemplate:
    """Recognizes a trap cause and the handler code that recovers from it.

    ``cost`` is the number of handler instructions charged to ``executed_count``.
    """

    name: str
    cause: int
    resume: Resume
    cost: int
    reason: Optional[str] = None
    counts_retired: bool = False

    def matches(self, trap: ArchTrap) -> bool:
        if trap.cause != self.cause:
            return False
        return self.reason is None or trap.reason == self.reason


INVALID_FRM = ExceptionTemplate("invalid_frm", ILLEGAL_INSTRUCTION, Resume.REPLAY, 4, REASON_FRM)
MISALIGNED_LOAD = ExceptionTemplate("misaligned_load", LOAD_MISALIGNED, Resume.REALIGN, 6)
MISALIGNED_STORE = ExceptionTemplate("misaligned_store", STORE_MISALIGNED, Resume.REALIGN, 6)
DISABLED_EXTENSION = ExceptionTemplate(
    "disabled_extension", ILLEGAL_INSTRUCTION, Resume.NEXT, 3, REASON_DISABLED
)
BREAKPOINT_SKIP = ExceptionTemplate("breakpoint", BREAKPOINT, Resume.NEXT, 2, counts_retired=True)

DEFAULT_TEMPLATES = (INVALID_FRM, MISALIGNED_LOAD, MISALIGNED_STORE, DISABLED_EXTENSION, BREAKPOINT_SKIP)


@dataclass(frozen=True)
class Handled:
    """Result of `handle_exception`."""

    outcome: HandlerOutcome
    template: Optional[ExceptionTemplate] = None

    @property
    def resumed(self) -> bool:
        return self.outcome is HandlerOutcome.RESUMED


def match_template(
    trap: ArchTrap, templates: Sequence[ExceptionTemplate] = DEFAULT_TEMPLATES
) -> Optional[ExceptionTemplate]:
    for template in templates:
        if template.matches(trap):
            return template
    return None


def handle_exception(
    state: ArchState,
    trap: ArchTrap,
    templates: Sequence[ExceptionTemplate] = DEFAULT_TEMPLATES,
) -> Handled:
    """Enter the handler for ``trap`` and apply the matching template's state fix.

    mepc and mcause are written first. The invalid-rounding-mode template rewrites
    frm to RNE so the faulting instruction can be replayed; the breakpoint template
    counts the ebreak as retired. Realignment is carried out by the driver, which
    owns the interpreter. Without a matching template the run is abandoned.
    """
    state.csrs[MEPC] = state.pc
    state.csrs[MCAUSE] = trap.cause
    template = match_template(trap, templates)
    if template is None:
        logger.info("exception_abandoned", cause=trap.cause, reason=trap.reason, pc=state.pc)
        return Handled(HandlerOutcome.ABANDONED)

    if template.resume is Resume.REPLAY and template.reason == REASON_FRM:
        state.set_frm(0)
    if template.counts_retired:
        state.count_retired()
    logger.debug(
        "exception_template_applied", template=template.name, cause=trap.cause, pc=state.pc
    )
    return Handled(HandlerOutcome.RESUMED, template)


def check_rounding_mode(rm: int, frm: int) -> int:
    """Effective rounding mode of an FP instruction.

    Raises:
        ArchTrap: illegal instruction, reason ``frm`` for a dynamic mode with a reserved frm,
            reason ``rm`` for a reserved static mode
    """
    if rm == RM_DYN:
        if frm > 4:
            raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_FRM)
        return frm
    if rm > 4:
        raise ArchTrap(ILLEGAL_INSTRUCTION, REASON_RM)
    return rm
