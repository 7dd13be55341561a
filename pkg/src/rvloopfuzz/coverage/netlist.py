"""A minimal netlist IR: modules with inputs, registers, mux selects and instances.

Text grammar, one declaration per line, ``#`` starts a comment::

    module NAME
      input NAME WIDTH
      reg NAME WIDTH [<- SOURCE ...]
      mux NAME sel SOURCE [SOURCE ...]
      inst NAME MODULE
    end

A SOURCE is a register or input of the same module, or ``INST.PORT`` naming a
register or input of an instantiated submodule. Submodule ports count as the
module boundary.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import structlog

from ..validation import ValidationError

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class Register:
    """A state element; ``sources`` feed its next value."""

    name: str
    width: int
    sources: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Mux:
    name: str
    select: Tuple[str, ...]


@dataclass(frozen=True)
class Instance:
    name: str
    module: str


@dataclass
class NetlistModule:
    """One module of the IR, declarations kept in file order."""

    name: str
    inputs: Dict[str, int] = field(default_factory=dict)
    registers: Dict[str, Register] = field(default_factory=dict)
    muxes: List[Mux] = field(default_factory=list)
    instances: Dict[str, Instance] = field(default_factory=dict)

    def declares(self, name: str) -> bool:
        return name in self.inputs or name in self.registers

    def is_port_reference(self, source: str) -> bool:
        """``INST.PORT`` references cross into a submodule."""
        return "." in source

    def width_of(self, name: str) -> int:
        if name in self.registers:
            return self.registers[name].width
        return self.inputs[name]

    def __str__(self) -> str:
        return (
            f"NetlistModule({self.name}: {len(self.inputs)} inputs, "
            f"{len(self.registers)} regs, {len(self.muxes)} muxes)"
        )


@dataclass
class Netlist:
    """All modules of a netlist file."""

    modules: Dict[str, NetlistModule] = field(default_factory=dict)

    def __getitem__(self, name: str) -> NetlistModule:
        try:
            return self.modules[name]
        except KeyError:
            raise ValidationError(
                f"netlist has no module {name}", field="module", value=name
            ) from None

    def __contains__(self, name: object) -> bool:
        return name in self.modules

    def __iter__(self) -> Iterator[NetlistModule]:
        return iter(self.modules.values())

    @property
    def top(self) -> Optional[str]:
        """The last declared module that no other module instantiates."""
        used = {inst.module for m in self for inst in m.instances.values()}
        roots = [name for name in self.modules if name not in used]
        return roots[-1] if roots else None

    def check(self) -> None:
        """Verify every reference resolves.

        Raises:
            ValidationError: Listing every dangling reference
        """
        problems: List[str] = []
        for module in self:
            for inst in module.instances.values():
                if inst.module not in self.modules:
                    problems.append(f"{module.name}.{inst.name}: unknown module {inst.module}")
            refs = [(r.name, s) for r in module.registers.values() for s in r.sources]
            refs += [(m.name, s) for m in module.muxes for s in m.select]
            for owner, source in refs:
                if not self._resolves(module, source):
                    problems.append(f"{module.name}.{owner}: undeclared source {source}")
        if problems:
            raise ValidationError("netlist references do not resolve", fields=problems)

    def _resolves(self, module: NetlistModule, source: str) -> bool:
        if not module.is_port_reference(source):
            return module.declares(source)
        inst_name, _, port = source.partition(".")
        inst = module.instances.get(inst_name)
        if inst is None or inst.module not in self.modules:
            return False
        return self.modules[inst.module].declares(port)


def _width(token: str, lineno: int) -> int:
    try:
        width = int(token, 0)
    except ValueError:
        width = 0
    if width <= 0:
        raise ValidationError(
            f"line {lineno}: width must be a positive integer", field="width", value=token
        )
    return width


def parse_netlist(text: str) -> Netlist:
    """Parse netlist IR text.

    Raises:
        ValidationError: On syntax errors, duplicate names or dangling references
    """
    netlist = Netlist()
    current: Optional[NetlistModule] = None

    def fail(lineno: int, message: str, value: object = None) -> ValidationError:
        return ValidationError(f"line {lineno}: {message}", field="netlist", value=value)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]

        if keyword == "module":
            if current is not None:
                raise fail(lineno, f"module {current.name} is not closed")
            if len(args) != 1:
                raise fail(lineno, "module takes a name", raw)
            if args[0] in netlist.modules:
                raise fail(lineno, f"duplicate module {args[0]}", args[0])
            current = NetlistModule(args[0])
            continue
        if current is None:
            raise fail(lineno, f"{keyword} outside of a module", raw)

        if keyword == "end":
            netlist.modules[current.name] = current
            current = None
        elif keyword == "input":
            if len(args) != 2:
                raise fail(lineno, "input takes a name and a width", raw)
            if current.declares(args[0]):
                raise fail(lineno, f"duplicate name {args[0]}", args[0])
            current.inputs[args[0]] = _width(args[1], lineno)
        elif keyword == "reg":
            if len(args) < 2:
                raise fail(lineno, "reg takes a name and a width", raw)
            if current.declares(args[0]):
                raise fail(lineno, f"duplicate name {args[0]}", args[0])
            sources: Tuple[str, ...] = ()
            if len(args) > 2:
                if args[2] != "<-" or len(args) == 3:
                    raise fail(lineno, "expected '<-' followed by sources", raw)
                sources = tuple(args[3:])
            current.registers[args[0]] = Register(args[0], _width(args[1], lineno), sources)
        elif keyword == "mux":
            if len(args) < 3 or args[1] != "sel":
                raise fail(lineno, "mux takes a name, 'sel' and select sources", raw)
            current.muxes.append(Mux(args[0], tuple(args[2:])))
        elif keyword == "inst":
            if len(args) != 2:
                raise fail(lineno, "inst takes a name and a module", raw)
            current.instances[args[0]] = Instance(args[0], args[1])
        else:
            raise fail(lineno, f"unknown keyword {keyword}", keyword)

    if current is not None:
        raise ValidationError(
            f"module {current.name} is not closed", field="netlist", value=current.name
        )
    netlist.check()
    return netlist


def load_netlist(path: Optional[Path | str] = None) -> Netlist:
    """Load a netlist file, the bundled core netlist when ``path`` is None."""
    if path is None:
        return default_netlist()
    netlist = parse_netlist(Path(path).read_text(encoding="utf-8"))
    logger.info("netlist_loaded", path=str(path), modules=len(netlist.modules))
    return netlist


@lru_cache(maxsize=1)
def default_netlist() -> Netlist:
    text = resources.files(__package__).joinpath("data/core.netlist").read_text(encoding="utf-8")
    return parse_netlist(text)
