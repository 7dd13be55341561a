"""Tests for the netlist IR, control-register extraction, mappers and coverage maps."""

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from rvloopfuzz.coverage import (
    CoverageMap,
    Instrumentation,
    Register,
    apply_weight_shift,
    build_mapper_legacy,
    build_mapper_sequential,
    coverage_index,
    default_netlist,
    extract_control_registers,
    instrumented_points,
    merge_maps,
    parse_netlist,
    reachable_indices,
    reachable_points,
    sequential_offsets,
    unreachable_points,
)
from rvloopfuzz.genmut import Lfsr
from rvloopfuzz.models import DEFAULT_MODULE_WEIGHTS, CoverageConfig, MapperScheme
from rvloopfuzz.validation import (
    BoundError,
    ConfigurationError,
    ContractError,
    MergeError,
    ValidationError,
)

DIAMOND = """
module diamond
  input a 1
  input b 2
  reg r1 2 <- r2 r3
  reg r2 1 <- r4 a
  reg r3 3 <- r4 r1
  reg r4 1 <- r2 b
  reg data 8 <- r1
  reg orphan 4 <- orphan
  mux m sel r1
end
"""


def _regs(*widths):
    return [Register(f"r{i}", w) for i, w in enumerate(widths)]


def _reference_controls(module):
    """Recursive DFS over register sources, independent of the BFS under test."""
    found = set()

    def visit(name):
        if name in found or name not in module.registers:
            return
        found.add(name)
        for source in module.registers[name].sources:
            visit(source)

    for mux in module.muxes:
        for source in mux.select:
            visit(source)
    return found


class TestNetlist:
    """Test the IR parser."""

    def test_bundled_netlist(self):
        """The core netlist parses and its top module is core."""
        netlist = default_netlist()
        assert netlist.top == "core"
        for module in DEFAULT_MODULE_WEIGHTS:
            assert module in netlist

    def test_declarations(self):
        """Registers keep widths and sources."""
        module = parse_netlist(DIAMOND)["diamond"]
        assert module.registers["r3"].width == 3
        assert module.registers["r3"].sources == ("r4", "r1")
        assert module.inputs == {"a": 1, "b": 2}

    def test_dangling_source(self):
        """A select from an undeclared name is rejected."""
        with pytest.raises(ValidationError):
            parse_netlist("module m\n  reg r 1\n  mux x sel ghost\nend\n")

    def test_unknown_submodule_port(self):
        """Port references must name a real port of the instance's module."""
        text = "module s\n  reg q 1\nend\nmodule t\n  inst u s\n  reg p 1 <- u.nope\nend\n"
        with pytest.raises(ValidationError):
            parse_netlist(text)

    def test_unclosed_module(self):
        """A module without end is a syntax error."""
        with pytest.raises(ValidationError):
            parse_netlist("module m\n  reg r 1\n")

    def test_bad_width(self):
        """Widths are positive integers."""
        with pytest.raises(ValidationError):
            parse_netlist("module m\n  reg r zero\nend\n")


class TestExtractControlRegisters:
    """Test backward tracing from mux selects."""

    def test_single_hop(self):
        """A register selecting a mux directly is a control register."""
        module = parse_netlist("module m\n  reg r 1\n  reg d 4\n  mux x sel r\nend\n")["m"]
        assert [r.name for r in extract_control_registers(module)] == ["r"]

    def test_two_hop_chain(self):
        """Tracing continues through registers up to the boundary input."""
        text = "module m\n  input i 1\n  reg r2 1 <- i\n  reg r1 2 <- r2\n  mux x sel r1\nend\n"
        names = {r.name for r in extract_control_registers(parse_netlist(text)["m"])}
        assert names == {"r1", "r2"}

    def test_cycle_terminates(self):
        """Register cycles are traced once, matching an independent search."""
        module = parse_netlist(DIAMOND)["diamond"]
        names = [r.name for r in extract_control_registers(module)]
        assert len(names) == len(set(names))
        assert set(names) == _reference_controls(module) == {"r1", "r2", "r3", "r4"}

    def test_bundled_modules(self):
        """Data registers of the core netlist stay uninstrumented."""
        netlist = default_netlist()
        assert [r.name for r in extract_control_registers(netlist["seqdet"])] == ["seq_state"]
        frontend = {r.name for r in extract_control_registers(netlist["frontend"])}
        assert "fetch_pc" not in frontend
        assert {"ex_class", "mem_class", "br_hist", "redirect"} <= frontend
        for module in netlist:
            assert {r.name for r in extract_control_registers(module)} == _reference_controls(module)

    def test_stops_at_submodule_ports(self):
        """Ports of instances are boundary, not registers of the parent."""
        names = [r.name for r in extract_control_registers(default_netlist()["core"])]
        assert names == ["priv"]


class TestSequentialMapper:
    """Test the end-to-end mapper."""

    def test_offsets_without_wrap(self):
        """Widths 3 and 5 in 8 bits sit at 0 and 3."""
        mapper = build_mapper_sequential(_regs(3, 5), 8)
        assert [p.position for p in mapper.placements] == [0, 3]

    def test_offset_recurrence(self):
        """The offset after 30 with a 5-bit register in 32 bits is 3."""
        assert sequential_offsets([30, 5, 1], 32) == [0, 30, 3]
        assert sequential_offsets([5, 5, 5], 8) == [0, 5, 2]

    @given(
        widths=st.lists(st.integers(min_value=1, max_value=12), min_size=1, max_size=8),
        size=st.integers(min_value=12, max_value=24),
    )
    def test_recurrence_holds(self, widths, size):
        """Every offset follows from its predecessor and stays in range."""
        offsets = [p.position for p in build_mapper_sequential(_regs(*widths), size).placements]
        assert offsets[0] == 0
        for previous, width, offset in zip(offsets, widths, offsets[1:]):
            assert offset == (previous + width) % size
        assert all(o < size for o in offsets)

    def test_register_wider_than_index(self):
        """A register that cannot fit is a configuration error."""
        with pytest.raises(ConfigurationError):
            build_mapper_sequential(_regs(9), 8)

    def test_index_examples(self):
        """Zero maps to zero and a lone register maps to itself."""
        mapper = build_mapper_sequential(_regs(4), 8)
        assert coverage_index(mapper, [0]) == 0
        assert coverage_index(mapper, [0xA]) == 0x0A

    def test_wrapped_bits_fold(self):
        """Bits past the top of the index XOR into the low bits."""
        mapper = build_mapper_sequential(_regs(5, 5), 8)
        assert coverage_index(mapper, [0, 0b11111]) == 0b11100000 ^ 0b11
        assert coverage_index(mapper, [0b00011, 0b01000]) == 0b00011 ^ 0b1
        assert coverage_index(mapper, {"r0": 1, "r1": 0}) == 1

    def test_full_image_when_width_matches(self):
        """Total width equal to the index width is a bijection."""
        mapper = build_mapper_sequential(_regs(3, 2, 3), 8)
        assert reachable_points(mapper) == 256

    @settings(max_examples=40, deadline=None)
    @given(
        widths=st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=4),
        size=st.integers(min_value=5, max_value=10),
    )
    def test_no_unreachable_points(self, widths, size):
        """Every instrumented point of a sequential mapper is reachable."""
        mapper = build_mapper_sequential(_regs(*widths), size)
        assert reachable_points(mapper) == instrumented_points(mapper)
        assert unreachable_points(mapper) == 0


class TestLegacyMapper:
    """Test the random-shift XOR mapper."""

    def test_identity(self):
        """One 4-bit register in 4 bits at shift 0 reaches all 16 points."""
        mapper = build_mapper_legacy(_regs(4), 4, shifts=[0])
        assert coverage_index(mapper, [0xA]) == 0xA
        assert reachable_points(mapper) == 16

    def test_xor_aliasing(self):
        """Two 1-bit registers at bit 0 collide."""
        mapper = build_mapper_legacy(_regs(1, 1), 4, shifts=[0, 0])
        assert coverage_index(mapper, [0, 1]) == coverage_index(mapper, [1, 0])
        assert coverage_index(mapper, [1, 1]) == 0
        assert reachable_points(mapper) == 2

    def test_shift_out_of_range(self):
        """A shift that pushes a register past the index is rejected."""
        with pytest.raises(ConfigurationError):
            build_mapper_legacy(_regs(4), 8, shifts=[5])

    def test_random_shifts_in_range(self):
        """Drawn shifts respect the allowed range."""
        rng = Lfsr(0xBEEF, 32)
        for _ in range(50):
            mapper = build_mapper_legacy(_regs(3, 4, 5), 8, rng)
            for placement in mapper.placements:
                assert 0 <= placement.position <= 8 - placement.width

    def test_unreachable_points_common(self):
        """Most random legacy mappers of a 12-bit state into 8 bits leave holes."""
        rng = Lfsr(0x5EED, 32)
        regs = _regs(4, 4, 4)
        counts = [reachable_points(build_mapper_legacy(regs, 8, rng)) for _ in range(100)]
        assert sum(1 for c in counts if c < 256) >= 50

    def test_sequential_dominates(self):
        """Sequential reachability is never below legacy on the same registers."""
        rng = Lfsr(0x1D, 32)
        regs = _regs(2, 3, 4, 3)
        sequential = reachable_points(build_mapper_sequential(regs, 10))
        for _ in range(30):
            assert reachable_points(build_mapper_legacy(regs, 10, rng)) <= sequential

    @settings(max_examples=30, deadline=None)
    @given(
        widths=st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=4),
        data=st.data(),
    )
    def test_index_in_range(self, widths, data):
        """Indices always fall inside the index space."""
        shifts = [data.draw(st.integers(0, 6 - min(w, 6))) for w in widths]
        mapper = build_mapper_legacy(_regs(*widths), 6, shifts=shifts)
        values = [data.draw(st.integers(0, (1 << w) - 1)) for w in widths]
        assert 0 <= coverage_index(mapper, values) < 64


class TestIndexContract:
    """Test value checking on index computation."""

    def test_value_too_wide(self):
        """A value that overflows its register is a contract error."""
        with pytest.raises(ContractError):
            coverage_index(build_mapper_sequential(_regs(2), 8), [4])

    def test_missing_register(self):
        """Mappings must name every register."""
        with pytest.raises(ContractError):
            coverage_index(build_mapper_sequential(_regs(2, 2), 8), {"r0": 1})

    def test_enumeration_bound(self):
        """Oversized control state is refused."""
        mapper = build_mapper_sequential(_regs(6, 6), 12)
        with pytest.raises(BoundError):
            reachable_points(mapper, limit_bits=8)

    def test_reachable_image_matches_indices(self):
        """The boolean image marks exactly the computed indices."""
        mapper = build_mapper_legacy(_regs(2, 2), 4, shifts=[1, 2])
        expected = {coverage_index(mapper, [a, b]) for a in range(4) for b in range(4)}
        assert set(np.flatnonzero(reachable_indices(mapper)).tolist()) == expected


class TestWeightShift:
    """Test N_cov weighting."""

    def test_examples(self):
        """Left shifts multiply and right shifts floor-divide."""
        assert apply_weight_shift(12, 2) == 48
        assert apply_weight_shift(12, -2) == 3
        assert apply_weight_shift(12, 0) == 12

    def test_bound(self):
        """Shifts beyond the bound are refused."""
        with pytest.raises(ContractError):
            apply_weight_shift(12, 9)


class TestCoverageMap:
    """Test hit recording, merge and dumps."""

    def test_record_hit(self):
        """First hits count and repeats do not."""
        covmap = CoverageMap({"lsu": 4})
        assert covmap.record_hit("lsu", 5) is True
        assert covmap.n_cov("lsu") == 1
        assert covmap.record_hit("lsu", 5) is False
        assert covmap.n_cov("lsu") == 1

    def test_out_of_range(self):
        """Indices past the map are contract errors."""
        with pytest.raises(ContractError):
            CoverageMap({"lsu": 4}).record_hit("lsu", 16)
        with pytest.raises(ContractError):
            CoverageMap({"lsu": 4}).record_hit("fpu", 0)

    @given(hits=st.lists(st.tuples(st.sampled_from(["a", "b"]), st.integers(0, 63))))
    def test_accounting(self, hits):
        """N_cov equals the bitmap population count after any hit sequence."""
        covmap = CoverageMap({"a": 6, "b": 5})
        for module, index in hits:
            if index < covmap.size_of(module):
                covmap.record_hit(module, index)
        for module in covmap.modules:
            assert covmap.n_cov(module) == covmap.popcount(module)
        assert covmap.total == len({(m, i) for m, i in hits if i < covmap.size_of(m)})

    def test_feedback_metric(self):
        """The feedback metric sums weight-shifted counts."""
        covmap = CoverageMap({"a": 4, "b": 4}, {"a": 2, "b": -1})
        for index in range(3):
            covmap.record_hit("a", index)
            covmap.record_hit("b", index)
        assert covmap.feedback_metric() == (3 << 2) + (3 >> 1)

    @given(
        st.lists(
            st.lists(st.integers(0, 31), max_size=20),
            min_size=3,
            max_size=3,
        )
    )
    def test_merge_laws(self, triples):
        """Merge is commutative and associative and recounts."""
        maps = []
        for hits in triples:
            covmap = CoverageMap({"m": 5})
            for index in hits:
                covmap.record_hit("m", index)
            maps.append(covmap)
        a, b, c = maps
        assert a.merge(b) == b.merge(a)
        assert a.merge(b).merge(c) == a.merge(b.merge(c))
        merged = merge_maps(maps)
        assert merged.n_cov("m") == merged.popcount("m") == len(set().union(*triples))
        assert merge_maps([a]) == a

    def test_merge_layout_mismatch(self):
        """Maps of different layouts do not merge."""
        with pytest.raises(MergeError):
            CoverageMap({"a": 4}).merge(CoverageMap({"a": 5}))

    def test_dump_round_trip(self, tmp_path):
        """Dumps reload to an equal map with identical counters."""
        covmap = CoverageMap({"fpu": 6, "seqdet": 2}, {"fpu": 1})
        for index in (0, 7, 63):
            covmap.record_hit("fpu", index)
        covmap.record_hit("seqdet", 3)
        loaded = CoverageMap.load(covmap.dump(tmp_path / "coverage.bin"))
        assert loaded == covmap
        assert loaded.to_dict() == covmap.to_dict()

    def test_truncated_dump(self):
        """A short payload is rejected."""
        covmap = CoverageMap({"m": 8})
        with pytest.raises(ValidationError):
            CoverageMap.from_bytes(covmap.to_bytes()[:-4])


class TestInstrumentation:
    """Test the instrumentation pass over the bundled netlist."""

    def test_default_modules(self):
        """Every configured module gets a mapper and a map region."""
        inst = Instrumentation.default()
        assert set(inst.mappers) == set(DEFAULT_MODULE_WEIGHTS)
        covmap = inst.new_map()
        assert covmap.size_of("fpu") == 1 << 14

    def test_observe(self):
        """A snapshot covers one point per module, once."""
        inst = Instrumentation.default()
        snapshot = {
            module: {reg: 0 for reg in mapper.registers} for module, mapper in inst.mappers.items()
        }
        snapshot["seqdet"]["seq_state"] = 3
        covmap = inst.new_map()
        fresh = inst.observe(snapshot, covmap)
        assert ("seqdet", 3) in fresh
        assert len(fresh) == len(inst.mappers)
        assert inst.observe(snapshot, covmap) == []

    def test_summary(self):
        """Sequential instrumentation reports no unreachable points."""
        config = CoverageConfig(max_state_size=10, modules={"lsu": 0, "muldiv": 1})
        summary = Instrumentation.build(config).summary()
        assert all(row["unreachable"] == 0 for row in summary.values())

    def test_legacy_needs_rng(self):
        """Legacy instrumentation draws shifts from a stream."""
        config = CoverageConfig(scheme=MapperScheme.LEGACY, max_state_size=10)
        with pytest.raises(ConfigurationError):
            Instrumentation.build(config)
        inst = Instrumentation.build(config, rng=Lfsr(3, 32))
        assert all(m.scheme is MapperScheme.LEGACY for m in inst.mappers.values())

    def test_unknown_module(self):
        """Configured modules must exist in the netlist."""
        with pytest.raises(ConfigurationError):
            Instrumentation.build(CoverageConfig(modules={"gpu": 0}))

    def test_netlist_file(self, tmp_path):
        """A netlist path in the config is honored."""
        path = tmp_path / "tiny.netlist"
        path.write_text("module tiny\n  input i 2\n  reg r 2 <- i\n  mux m sel r\nend\n")
        config = CoverageConfig(modules={"tiny": 0}, max_state_size=4, netlist_path=str(path))
        inst = Instrumentation.build(config)
        assert inst.mappers["tiny"].registers == ["r"]


def _synthetic_module(lfsr):
    widths = []
    target = 8 + lfsr.randbelow(9)
    while sum(widths) < target:
        widths.append(min(2 + lfsr.randbelow(3), target - sum(widths)))
    lines = ["module syn", "  input i 1"]
    for n, width in enumerate(widths):
        source = "i" if n == 0 else f"c{n - 1}"
        lines.append(f"  reg c{n} {width} <- {source}")
    lines.append("  mux m sel " + " ".join(f"c{n}" for n in range(len(widths))))
    lines.append("end")
    return parse_netlist("\n".join(lines))["syn"]


@pytest.mark.slow
class TestReachabilityAcceptance:
    """Sequential versus legacy reachability over synthetic netlists."""

    def test_synthetic_netlists(self):
        """Sequential mappers have no holes; legacy mappers mostly do."""
        lfsr = Lfsr(0xC0FFEE, 32)
        for _ in range(20):
            size = 8 + lfsr.randbelow(5)
            regs = extract_control_registers(_synthetic_module(lfsr))
            sequential = build_mapper_sequential(regs, size)
            assert reachable_points(sequential) == instrumented_points(sequential)
            holes = sum(
                1
                for _ in range(100)
                if unreachable_points(build_mapper_legacy(regs, size, lfsr)) > 0
            )
            assert holes >= 50
