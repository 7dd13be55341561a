"""Control-register extraction by backward tracing from mux selects."""

from collections import deque
from typing import List

import structlog

from .netlist import NetlistModule, Register

logger = structlog.get_logger(__name__)


def extract_control_registers(module: NetlistModule) -> List[Register]:
    """Registers on some backward path from a mux select to the module boundary.

    Tracing follows register sources breadth-first and stops at inputs and
    submodule ports. A visited set makes register cycles terminate.

    Returns:
        Control registers in declaration order
    """
    visited = set()
    frontier = deque(s for mux in module.muxes for s in mux.select)
    while frontier:
        name = frontier.popleft()
        if name in visited or name not in module.registers:
            continue
        visited.add(name)
        frontier.extend(module.registers[name].sources)

    registers = [reg for name, reg in module.registers.items() if name in visited]
    logger.debug(
        "control_registers_extracted",
        module=module.name,
        registers=[r.name for r in registers],
        width=sum(r.width for r in registers),
    )
    return registers
