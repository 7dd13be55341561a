"""Instrumentation pass: per-module mappers built from a netlist and the coverage config."""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import structlog

from ..models import CoverageConfig, MapperScheme
from ..validation import ConfigurationError
from .covmap import CoverageMap
from .extract import extract_control_registers
from .mapper import CoverageMapper, ShiftSource, build_mapper, mapper_summary
from .netlist import Netlist, default_netlist, load_netlist

logger = structlog.get_logger(__name__)

PointKey = Tuple[str, int]


@dataclass
class Instrumentation:
    """Mappers for the instrumented modules of one netlist.

    `observe` turns a shadow-register snapshot (module -> register -> value)
    into hits on a `CoverageMap` and returns the newly covered points.
    """

    netlist: Netlist
    mappers: Dict[str, CoverageMapper]

    @classmethod
    def build(
        cls,
        config: CoverageConfig,
        netlist: Optional[Netlist] = None,
        rng: Optional[ShiftSource] = None,
    ) -> "Instrumentation":
        """Run extraction and mapper construction for every configured module.

        Raises:
            ConfigurationError: If a configured module is missing from the netlist, or
                the legacy scheme is requested without an rng
        """
        if netlist is None:
            netlist = load_netlist(config.netlist_path)
        if config.scheme is MapperScheme.LEGACY and rng is None:
            raise ConfigurationError("legacy mappers need an rng", config_key="coverage.scheme")
        mappers: Dict[str, CoverageMapper] = {}
        for name, weight_shift in config.modules.items():
            if name not in netlist:
                raise ConfigurationError(
                    f"instrumented module {name} is not in the netlist",
                    config_key=f"coverage.modules.{name}",
                )
            regs = extract_control_registers(netlist[name])
            mappers[name] = build_mapper(
                config.scheme, regs, config.max_state_size, rng, weight_shift
            )
        logger.info(
            "instrumentation_built",
            scheme=config.scheme.value,
            max_state_size=config.max_state_size,
            modules={m: mp.total_width for m, mp in mappers.items()},
        )
        return cls(netlist, mappers)

    @classmethod
    def default(cls, config: Optional[CoverageConfig] = None) -> "Instrumentation":
        """Sequential instrumentation of the bundled core netlist."""
        return cls.build(config or CoverageConfig(), default_netlist())

    def new_map(self) -> CoverageMap:
        return CoverageMap(
            {m: mp.max_state_size for m, mp in self.mappers.items()},
            {m: mp.weight_shift for m, mp in self.mappers.items()},
        )

    def indices(self, snapshot: Mapping[str, Mapping[str, int]]) -> Dict[str, int]:
        """Coverage index of every instrumented module for one snapshot."""
        return {m: mp.index(snapshot[m]) for m, mp in self.mappers.items()}

    def observe(
        self, snapshot: Mapping[str, Mapping[str, int]], covmap: CoverageMap
    ) -> List[PointKey]:
        """Record one snapshot; returns the (module, index) points covered for the first time."""
        fresh = []
        for module, index in self.indices(snapshot).items():
            if covmap.record_hit(module, index):
                fresh.append((module, index))
        return fresh

    def summary(self) -> Dict[str, Dict[str, object]]:
        """Reachability per module, as printed by ``rvloopfuzz instrument``."""
        return {m: mapper_summary(mp) for m, mp in self.mappers.items()}
