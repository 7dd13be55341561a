"""Bundled benchmark programs that seed the hybrid stage.

Kernels are small self-contained loops over the data segment. They keep no code
addresses in registers (no ``auipc``, no linking jumps), so a captured register state
stays valid when the program is relaid out behind a prologue.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import structlog

from ..isa import Assembler, Instruction
from ..models import HarnessConfig
from ..validation import ConfigurationError

logger = structlog.get_logger(__name__)

MANIFEST_VERSION = 1
HIST_BYTES = 0x400


@dataclass(frozen=True)
class Benchmark:
    """A benchmark program assembled at the code base."""

    name: str
    description: str
    program: Tuple[Instruction, ...]
    base: int
    data_seed: int

    @property
    def length(self) -> int:
        return len(self.program)

    @property
    def end(self) -> int:
        return self.base + 4 * len(self.program)

    def __str__(self) -> str:
        return f"Benchmark({self.name}, {self.length} instructions)"


def _isort(h: HarnessConfig, n: int) -> List[Instruction]:
    n = min(n, h.data_size // 4)
    return (
        Assembler(h.code_base)
        .li("s0", h.data_base)
        .li("s1", n)
        .li("t0", 1)
        .label("outer")
        .branch("bgeu", "t0", "s1", "done")
        .emit("slli", rd="t1", rs1="t0", shamt=2)
        .emit("add", rd="t1", rs1="s0", rs2="t1")
        .emit("lw", rd="t2", rs1="t1", imm=0)
        .label("inner")
        .branch("beq", "t1", "s0", "place")
        .emit("lw", rd="t3", rs1="t1", imm=-4)
        .branch("bge", "t2", "t3", "place")
        .emit("sw", rs1="t1", rs2="t3", imm=0)
        .emit("addi", rd="t1", rs1="t1", imm=-4)
        .jump("inner")
        .label("place")
        .emit("sw", rs1="t1", rs2="t2", imm=0)
        .emit("addi", rd="t0", rs1="t0", imm=1)
        .jump("outer")
        .label("done")
        .emit("addi", rd="a0", rs1="s1", imm=0)
        .assemble()
    )


def _crc32(h: HarnessConfig, n: int) -> List[Instruction]:
    n = min(n, h.data_size - 4)
    return (
        Assembler(h.code_base)
        .li("s0", h.data_base)
        .li("s1", n)
        .li("s2", 0xEDB88320)
        .li("a0", 0xFFFFFFFF)
        .li("t0", 0)
        .label("byte")
        .branch("bgeu", "t0", "s1", "done")
        .emit("add", rd="t1", rs1="s0", rs2="t0")
        .emit("lbu", rd="t2", rs1="t1", imm=0)
        .emit("xor", rd="a0", rs1="a0", rs2="t2")
        .emit("addi", rd="t3", rs1="zero", imm=8)
        .label("bit")
        .emit("andi", rd="t4", rs1="a0", imm=1)
        .emit("srli", rd="a0", rs1="a0", shamt=1)
        .branch("beq", "t4", "zero", "skip")
        .emit("xor", rd="a0", rs1="a0", rs2="s2")
        .label("skip")
        .emit("addi", rd="t3", rs1="t3", imm=-1)
        .branch("bne", "t3", "zero", "bit")
        .emit("addi", rd="t0", rs1="t0", imm=1)
        .jump("byte")
        .label("done")
        .emit("xori", rd="a0", rs1="a0", imm=-1)
        .emit("sw", rs1="s0", rs2="a0", imm=0)
        .assemble()
    )


def _bytehist(h: HarnessConfig, n: int, passes: int) -> List[Instruction]:
    table = h.data_size - HIST_BYTES
    n = min(n, table)
    return (
        Assembler(h.code_base)
        .li("s0", h.data_base)
        .li("s1", n)
        .li("s2", h.data_base + table)
        .li("s3", passes)
        .li("s4", 0)
        .label("pass")
        .branch("bgeu", "s4", "s3", "done")
        .emit("addi", rd="t0", rs1="zero", imm=0)
        .label("loop")
        .branch("bgeu", "t0", "s1", "next")
        .emit("add", rd="t1", rs1="s0", rs2="t0")
        .emit("lbu", rd="t2", rs1="t1", imm=0)
        .emit("slli", rd="t2", rs1="t2", shamt=2)
        .emit("add", rd="t2", rs1="s2", rs2="t2")
        .emit("lw", rd="t3", rs1="t2", imm=0)
        .emit("addi", rd="t3", rs1="t3", imm=1)
        .emit("sw", rs1="t2", rs2="t3", imm=0)
        .emit("addi", rd="t0", rs1="t0", imm=1)
        .jump("loop")
        .label("next")
        .emit("addi", rd="s4", rs1="s4", imm=1)
        .jump("pass")
        .label("done")
        .emit("addi", rd="a0", rs1="s4", imm=0)
        .assemble()
    )


def _fpkernel(h: HarnessConfig, n: int, passes: int) -> List[Instruction]:
    n = min(n, h.data_size // 4)
    return (
        Assembler(h.code_base)
        .li("s0", h.data_base)
        .li("s1", n)
        .li("s3", passes)
        .li("s4", 0)
        .li("t0", 0x3F000000)
        .emit("fmv.w.x", rd="f1", rs1="t0")
        .emit("fmv.w.x", rd="f0", rs1="zero")
        .emit("fmv.w.x", rd="f5", rs1="zero")
        .label("pass")
        .branch("bgeu", "s4", "s3", "done")
        .emit("addi", rd="t0", rs1="zero", imm=0)
        .label("loop")
        .branch("bgeu", "t0", "s1", "next")
        .emit("slli", rd="t1", rs1="t0", shamt=2)
        .emit("add", rd="t1", rs1="s0", rs2="t1")
        .emit("lw", rd="t2", rs1="t1", imm=0)
        .emit("srai", rd="t2", rs1="t2", shamt=20)
        .emit("fcvt.s.w", rd="f2", rs1="t2", rm=0)
        .emit("fmadd.s", rd="f0", rs1="f2", rs2="f1", rs3="f0", rm=7)
        .emit("fsgnjx.s", rd="f3", rs1="f2", rs2="f2")
        .emit("fsqrt.s", rd="f4", rs1="f3", rm=0)
        .emit("fadd.s", rd="f5", rs1="f5", rs2="f4", rm=0)
        .emit("flt.s", rd="t3", rs1="f4", rs2="f1")
        .emit("add", rd="s5", rs1="s5", rs2="t3")
        .emit("fsw", rs1="t1", rs2="f0", imm=0)
        .emit("addi", rd="t0", rs1="t0", imm=1)
        .jump("loop")
        .label("next")
        .emit("addi", rd="s4", rs1="s4", imm=1)
        .jump("pass")
        .label("done")
        .emit("fmv.x.w", rd="a0", rs1="f5")
        .assemble()
    )


def _polyseq(h: HarnessConfig, reps: int, limit: int) -> List[Instruction]:
    return (
        Assembler(h.code_base)
        .li("s1", reps)
        .li("a5", limit)
        .li("s2", 0)
        .li("s3", 0)
        .label("outer")
        .branch("bgeu", "s2", "s1", "done")
        .emit("addi", rd="a0", rs1="zero", imm=0)
        .label("loop")
        .emit("addi", rd="a0", rs1="a0", imm=1)
        .emit("mul", rd="t2", rs1="a0", rs2="a0")
        .emit("add", rd="a3", rs1="t2", rs2="a0")
        .branch("bltu", "a3", "a5", "loop")
        .emit("add", rd="s3", rs1="s3", rs2="a3")
        .emit("addi", rd="s2", rs1="s2", imm=1)
        .jump("outer")
        .label("done")
        .emit("addi", rd="a0", rs1="s3", imm=0)
        .assemble()
    )


KERNELS: Dict[str, Callable[..., List[Instruction]]] = {
    "isort": _isort,
    "crc32": _crc32,
    "bytehist": _bytehist,
    "fpkernel": _fpkernel,
    "polyseq": _polyseq,
}


def parse_manifest(document: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    """Benchmark entries by name.

    Raises:
        ConfigurationError: On an unsupported version or an unknown kernel
    """
    if document.get("version") != MANIFEST_VERSION:
        raise ConfigurationError(
            f"unsupported benchmark manifest version {document.get('version')}",
            config_key="version",
        )
    entries: Dict[str, Dict[str, Any]] = {}
    for entry in document["benchmarks"]:
        if entry["kernel"] not in KERNELS:
            raise ConfigurationError(
                f"benchmark {entry['name']} uses unknown kernel {entry['kernel']}",
                config_key=f"benchmarks.{entry['name']}.kernel",
            )
        entries[entry["name"]] = entry
    return entries


@lru_cache(maxsize=1)
def load_manifest() -> Dict[str, Dict[str, Any]]:
    """The bundled benchmark manifest."""
    text = resources.files(__package__).joinpath("data/benchmarks.json").read_text(encoding="utf-8")
    return parse_manifest(json.loads(text))


def benchmark_names() -> List[str]:
    return list(load_manifest())


def build_benchmark(
    name: str, harness: Optional[HarnessConfig] = None, scale: float = 1.0
) -> Benchmark:
    """Assemble one bundled benchmark; ``scale`` multiplies its size parameters.

    Raises:
        ConfigurationError: If the name is not in the manifest
    """
    harness = harness or HarnessConfig()
    manifest = load_manifest()
    if name not in manifest:
        raise ConfigurationError(f"unknown benchmark {name}", config_key="hybrid.benchmarks")
    entry = manifest[name]
    params = dict(entry["params"])
    for key in entry.get("scaled", ()):
        params[key] = max(1, round(params[key] * scale))
    program = KERNELS[entry["kernel"]](harness, **params)
    return Benchmark(
        name=name,
        description=entry["description"],
        program=tuple(program),
        base=harness.code_base,
        data_seed=entry["data_seed"],
    )


def bundled_benchmarks(
    names: Sequence[str] = (),
    harness: Optional[HarnessConfig] = None,
    scale: float = 1.0,
) -> List[Benchmark]:
    """The named benchmarks, or all of them when ``names`` is empty."""
    selected = list(names) or benchmark_names()
    benchmarks = [build_benchmark(name, harness, scale) for name in selected]
    logger.debug("benchmarks_built", names=selected, scale=scale)
    return benchmarks
