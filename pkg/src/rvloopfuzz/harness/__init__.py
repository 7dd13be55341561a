"""Lockstep execution of an instrumented DUT core against an independent reference core."""

from .state import ArchState, misa_value, sext
from .traps import (
    DEFAULT_TEMPLATES,
    ArchTrap,
    ExceptionTemplate,
    Handled,
    HandlerOutcome,
    Resume,
    check_rounding_mode,
    handle_exception,
    match_template,
)
from .memory import MemoryImage, build_memory, data_segment
from .records import FieldDiff, Retired, StepRecord, compare_records, first_divergence
from .bugs import BugContext, BugSpec, catalog_ids, get_bug, inject_bug, load_catalog
from .shadow import Retirement, ShadowModel, next_shadow, reset_shadow
from .dut import DutCore, Effect
from .ref import RefCore
from .lockstep import Execution, Lane, run_lane
from .snapshot import ArchSnapshot, CoreSnapshot, reset_snapshot, restore, take_snapshot
from .run import ground_truth, run_iteration, trace_run
from ..models.report import compute_prevalence

__all__ = [
    # Architectural state and traps
    "ArchState",
    "misa_value",
    "sext",
    "DEFAULT_TEMPLATES",
    "ArchTrap",
    "ExceptionTemplate",
    "Handled",
    "HandlerOutcome",
    "Resume",
    "check_rounding_mode",
    "handle_exception",
    "match_template",
    # Memory
    "MemoryImage",
    "build_memory",
    "data_segment",
    # Records
    "FieldDiff",
    "Retired",
    "StepRecord",
    "compare_records",
    "first_divergence",
    # Bugs
    "BugContext",
    "BugSpec",
    "catalog_ids",
    "get_bug",
    "inject_bug",
    "load_catalog",
    # Cores
    "Retirement",
    "ShadowModel",
    "next_shadow",
    "reset_shadow",
    "DutCore",
    "Effect",
    "RefCore",
    # Lockstep
    "Execution",
    "Lane",
    "run_lane",
    "ArchSnapshot",
    "CoreSnapshot",
    "reset_snapshot",
    "restore",
    "take_snapshot",
    "ground_truth",
    "run_iteration",
    "trace_run",
    "compute_prevalence",
]
