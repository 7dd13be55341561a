"""Register coverage: netlist IR, control-register extraction, mappers and hit maps."""

from .netlist import (
    Instance,
    Mux,
    Netlist,
    NetlistModule,
    Register,
    default_netlist,
    load_netlist,
    parse_netlist,
)
from .extract import extract_control_registers
from .mapper import (
    ENUMERATION_LIMIT_BITS,
    CoverageMapper,
    RegisterPlacement,
    apply_weight_shift,
    build_mapper,
    build_mapper_legacy,
    build_mapper_sequential,
    coverage_index,
    instrumented_points,
    legacy_shift_range,
    mapper_summary,
    reachable_indices,
    reachable_points,
    sequential_offsets,
    unreachable_points,
)
from .covmap import CoverageMap, merge_maps
from .instrument import Instrumentation, PointKey

__all__ = [
    # Netlist IR
    "Instance",
    "Mux",
    "Netlist",
    "NetlistModule",
    "Register",
    "default_netlist",
    "load_netlist",
    "parse_netlist",
    "extract_control_registers",
    # Mappers
    "ENUMERATION_LIMIT_BITS",
    "CoverageMapper",
    "RegisterPlacement",
    "apply_weight_shift",
    "build_mapper",
    "build_mapper_legacy",
    "build_mapper_sequential",
    "coverage_index",
    "instrumented_points",
    "legacy_shift_range",
    "mapper_summary",
    "reachable_indices",
    "reachable_points",
    "sequential_offsets",
    "unreachable_points",
    # Hit maps
    "CoverageMap",
    "merge_maps",
    "Instrumentation",
    "PointKey",
]
