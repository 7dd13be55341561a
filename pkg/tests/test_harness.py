"""Tests for the DUT and reference cores, exception templates, bugs, snapshots and lockstep runs."""

import dataclasses
import statistics

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from rvloopfuzz.coverage import Instrumentation
from rvloopfuzz.genmut import (
    FuzzIteration,
    GlobalContext,
    Lfsr,
    MemoryPolicy,
    generate_iteration,
    iteration_from_program,
)
from rvloopfuzz.harness import (
    ArchSnapshot,
    ArchState,
    ArchTrap,
    Execution,
    StepRecord,
    build_memory,
    catalog_ids,
    compare_records,
    first_divergence,
    get_bug,
    ground_truth,
    handle_exception,
    inject_bug,
    reset_snapshot,
    restore,
    run_iteration,
    sext,
    take_snapshot,
    trace_run,
)
from rvloopfuzz.harness import dut_fp, ref_fp
from rvloopfuzz.harness.dut import DutCore
from rvloopfuzz.harness.records import trace_digest
from rvloopfuzz.harness.shadow import SEQ_LOOPED
from rvloopfuzz.harness.traps import HandlerOutcome
from rvloopfuzz.isa import NOP_WORD, Assembler, asm, default_library
from rvloopfuzz.isa.csrs import FRM, MCAUSE, MEPC, MISA
from rvloopfuzz.models import HarnessConfig, ModeConfig, Outcome
from rvloopfuzz.validation import CatalogError, ContractError, ValidationError

CODE_BASE = HarnessConfig().code_base
DATA_BASE = HarnessConfig().data_base

ONE = 0x3F800000
MINUS_ONE = 0xBF800000
THREE = 0x40400000
INF = 0x7F800000


def build(program: Assembler, **kwargs) -> FuzzIteration:
    return iteration_from_program(program.assemble(), CODE_BASE, CODE_BASE, **kwargs)


def load_float(program: Assembler, freg: str, bits: int) -> Assembler:
    return program.li("t0", sext(bits, 32)).emit("fmv.w.x", rd=freg, rs1="t0")


def generated(seed: int, instructions: int = 200, **mode) -> FuzzIteration:
    config = ModeConfig(instructions_per_iteration=instructions, **mode)
    policy = MemoryPolicy.from_configs(config, HarnessConfig())
    return generate_iteration(config, default_library(), Lfsr(seed, 32), policy)


def bug_program(bug_id: str) -> Assembler:
    program = Assembler(CODE_BASE)
    if bug_id == "C1":
        program.emit("fmv.w.x", rd="f1", rs1="zero").emit("fmv.w.x", rd="f2", rs1="zero")
        program.emit("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0)
    elif bug_id == "C2":
        load_float(program, "f1", ONE)
        load_float(program, "f2", INF)
        program.emit("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0)
    elif bug_id == "C7":
        program.emit("ebreak").emit("csrrs", rd="a0", csr=MCAUSE, rs1="zero")
    elif bug_id == "C10":
        program.emit("fmv.w.x", rd="f1", rs1="zero")
        load_float(program, "f2", ONE)
        program.emit("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0)
    elif bug_id == "B1":
        load_float(program, "f1", MINUS_ONE)
        load_float(program, "f2", THREE)
        program.emit("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=2)
    elif bug_id == "B2":
        program.emit("csrrwi", rd="zero", csr=FRM, uimm=5)
        program.emit("fadd.s", rd="f3", rs1="f1", rs2="f2", rm=7)
    elif bug_id == "R1":
        program.emit("addi", rd="a0", rs1="zero", imm=1).emit("ebreak")
    program.emit("addi", rd="a1", rs1="zero", imm=2)
    return program


FAULTY_WORD = {
    "C1": asm("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0).word,
    "C2": asm("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0).word,
    "C7": asm("csrrs", rd="a0", csr=MCAUSE, rs1="zero").word,
    "C10": asm("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=0).word,
    "B1": asm("fdiv.s", rd="f3", rs1="f1", rs2="f2", rm=2).word,
    "B2": asm("fadd.s", rd="f3", rs1="f1", rs2="f2", rm=7).word,
    "R1": asm("ebreak").word,
}
EXPECTED_FIELD = {
    "C1": "fflags",
    "C2": "fflags",
    "C7": "x10",
    "C10": "f3",
    "B1": "f3",
    "B2": "trap",
    "R1": "minstret",
}


class TestArchState:
    """Test architectural state helpers."""

    def test_reset(self):
        """Reset state has zero registers and the enabled extensions in misa."""
        state = ArchState.reset(CODE_BASE, ["I", "M"])
        assert state.pc == CODE_BASE
        assert not any(state.x) and not any(state.f)
        assert state.minstret == 0
        assert state.csrs[MISA] & (1 << 8) and state.csrs[MISA] & (1 << 12)
        assert not state.csrs[MISA] & (1 << 5)

    def test_x0_pinned(self):
        """Writes to x0 are dropped."""
        state = ArchState.reset(0)
        state.set_x(0, 5)
        state.set_x(1, -1)
        assert state.x[0] == 0
        assert state.x[1] == 0xFFFF_FFFF_FFFF_FFFF

    def test_dict_round_trip(self):
        """to_dict/from_dict preserve every field."""
        state = ArchState.reset(CODE_BASE)
        state.set_x(7, 0x1234)
        state.f[3] = 0xFFFFFFFF3F800000
        state.set_frm(3)
        assert ArchState.from_dict(state.to_dict()) == state

    def test_diff(self):
        """diff names the differing registers and CSRs."""
        a = ArchState.reset(0)
        b = a.copy()
        b.set_x(5, 1)
        b.set_frm(2)
        assert a.diff(b) == ["x5", "fcsr"]


class TestExceptionHandling:
    """Test handle_exception and the template rules."""

    def test_invalid_frm_template(self):
        """A reserved dynamic rounding mode is rewritten to RNE and replayed."""
        state = ArchState.reset(CODE_BASE)
        state.set_frm(6)
        handled = handle_exception(state, ArchTrap(2, "frm"))
        assert handled.resumed
        assert handled.template.name == "invalid_frm"
        assert state.frm == 0
        assert state.csrs[MCAUSE] == 2
        assert state.csrs[MEPC] == CODE_BASE

    def test_unmatched_cause_abandoned(self):
        """An instruction access fault has no template."""
        state = ArchState.reset(CODE_BASE)
        handled = handle_exception(state, ArchTrap(1))
        assert handled.outcome is HandlerOutcome.ABANDONED
        assert handled.template is None

    def test_reserved_static_rm_abandoned(self):
        """A reserved static rounding mode is not the frm template's business."""
        state = ArchState.reset(CODE_BASE)
        assert not handle_exception(state, ArchTrap(2, "rm")).resumed

    def test_replay_runs_instruction(self):
        """The FP op behind an invalid frm retires on replay."""
        program = Assembler(CODE_BASE)
        load_float(program, "f1", ONE)
        load_float(program, "f2", THREE)
        program.emit("csrrwi", rd="zero", csr=FRM, uimm=5)
        program.emit("fadd.s", rd="f3", rs1="f1", rs2="f2", rm=7)
        execution = Execution(build(program), record_traces=True)
        assert execution.run() is Outcome.COMPLETED
        report = execution.report()
        assert report.exceptions_handled == 1
        trapped = [r for r in execution.dut_trace if r.trap is not None]
        assert len(trapped) == 1
        replay = execution.dut_trace[trapped[0].ordinal + 1]
        assert trapped[0].next_pc == trapped[0].pc == replay.pc
        assert replay.trap is None and replay.rd[0] == "f3"
        assert execution.dut.state.f[3] & 0xFFFFFFFF == 0x40800000
        assert execution.dut.state.frm == 0

    def test_misaligned_load_realigned(self):
        """A misaligned load reads the aligned word and resumes at the next instruction."""
        program = Assembler(CODE_BASE).li("t1", DATA_BASE).emit("lw", rd="a0", rs1="t1", imm=2)
        execution = Execution(build(program))
        assert execution.run() is Outcome.COMPLETED
        expected = sext(int.from_bytes(execution.dut.memory.data[0:4], "little"), 32)
        assert execution.dut.state.x[10] == expected & 0xFFFF_FFFF_FFFF_FFFF
        report = execution.report()
        assert report.exceptions_handled == 1
        assert report.executed_count == report.retired_count + 6

    def test_misaligned_store_realigned(self):
        """A misaligned store writes the aligned location."""
        program = (
            Assembler(CODE_BASE)
            .li("t1", DATA_BASE)
            .li("a0", 0x55)
            .emit("sh", rs1="t1", rs2="a0", imm=9)
        )
        execution = Execution(build(program))
        assert execution.run() is Outcome.COMPLETED
        assert execution.dut.memory.data[8:10] == b"\x55\x00"
        assert execution.ref.memory.data[8:10] == b"\x55\x00"

    def test_disabled_extension_skipped(self):
        """An instruction of a disabled extension is skipped without writing rd."""
        program = Assembler(CODE_BASE).li("a0", 6).li("a1", 7).emit("mul", rd="a2", rs1="a0", rs2="a1")
        config = HarnessConfig(disabled_extensions=["M"])
        execution = Execution(build(program), config)
        assert execution.run() is Outcome.COMPLETED
        assert execution.dut.state.x[12] == 0
        assert not execution.dut.state.csrs[MISA] & (1 << 12)
        assert execution.report().exceptions_handled == 1

    def test_breakpoint_counts_as_retired(self):
        """ebreak resumes at the next instruction and increments minstret."""
        program = Assembler(CODE_BASE).emit("ebreak").emit("addi", rd="a0", rs1="zero", imm=3)
        execution = Execution(build(program))
        assert execution.run() is Outcome.COMPLETED
        report = execution.report()
        assert execution.dut.state.minstret == report.retired_count
        assert execution.dut.state.x[10] == 3

    @pytest.mark.parametrize(
        "program, cause",
        [
            (Assembler(CODE_BASE).emit("ecall"), 11),
            (Assembler(CODE_BASE).li("t1", 0x100).emit("ld", rd="a0", rs1="t1", imm=0), 5),
            (Assembler(CODE_BASE).li("t1", CODE_BASE).emit("sw", rs1="t1", rs2="a0", imm=0), 7),
        ],
        ids=["ecall", "load-fault", "store-to-code"],
    )
    def test_unmatched_trap_abandons(self, program, cause):
        """Traps without a template end the run as abandoned, not as a mismatch."""
        report = run_iteration(build(program))
        assert report.outcome is Outcome.ABANDONED
        assert report.abandoned_cause == cause
        assert report.mismatch is None


class TestBuildMemory:
    """Test memory image construction."""

    def test_deterministic(self, small_iteration):
        """Same iteration and data seed give identical bytes."""
        assert build_memory(small_iteration).digest() == build_memory(small_iteration).digest()

    def test_data_seed_changes_data_only(self, small_iteration):
        """A different data seed changes the data segment, not the code."""
        a = build_memory(small_iteration, data_seed=3)
        b = build_memory(small_iteration, data_seed=4)
        assert a.code_digest() == b.code_digest()
        assert a.data != b.data

    def test_data_matches_lfsr_stream(self, small_iteration, harness_config):
        """The data segment is the standalone LFSR byte stream."""
        image = build_memory(small_iteration, harness_config, data_seed=0xBEEF)
        expected = Lfsr(0xBEEF, 32).fill_bytes(harness_config.data_size)
        assert bytes(image.data) == bytes(expected)

    def test_eliminated_block_absent(self, small_iteration):
        """An eliminated block leaves only NOPs and no fuzz addresses behind."""
        index = len(small_iteration.blocks) // 2
        block = small_iteration.blocks[index]
        header = list(small_iteration.control_header)
        header[index] = True
        pruned = dataclasses.replace(small_iteration, control_header=header)
        image = build_memory(pruned)
        for slot in range(block.length):
            address = block.address_of(slot)
            assert image.fetch(address) == NOP_WORD
            assert address not in image.block_addresses

    def test_overlay_applied(self, small_iteration):
        """Overlay bytes inside the data segment overwrite the LFSR fill."""
        overlaid = dataclasses.replace(small_iteration, memory_overlay={DATA_BASE + 3: 0xAB})
        assert build_memory(overlaid).data[3] == 0xAB

    def test_padding_is_not_fuzz(self):
        """NOPs between 16-byte aligned blocks belong to no block."""
        iteration = generated(4, block_align=16)
        image = build_memory(iteration)
        short = [block for _, block in iteration.surviving() if block.length % 4]
        assert short
        for block in short:
            assert image.is_fuzz_instruction(block.base_address)
            assert image.fetch(block.end_address) == NOP_WORD
            assert not image.is_fuzz_instruction(block.end_address)

    def test_default_layout_has_no_padding(self, small_iteration):
        """With instruction-granular bases every code slot below the boundary is a block slot."""
        image = build_memory(small_iteration)
        slots = range(image.code_base, image.code_boundary, 4)
        assert all(image.is_fuzz_instruction(pc) for pc in slots)

    def test_code_overflow_rejected(self, small_iteration):
        """An iteration larger than the code segment is refused."""
        with pytest.raises(ValidationError, match="code bytes"):
            build_memory(small_iteration, HarnessConfig(code_size=0x100))


class TestFloatAgreement:
    """The DUT and reference FP units agree bit for bit."""

    SPECIALS = [
        0x00000000, 0x80000000, 0x00000001, 0x807FFFFF, 0x00800000, 0x7F7FFFFF, 0xFF7FFFFF,
        0x7F800000, 0xFF800000, 0x7FC00000, 0x7F800001, 0xFFA00000, ONE, MINUS_ONE, THREE,
    ]  # fmt: skip
    BITS = st.one_of(st.integers(0, 0xFFFFFFFF), st.sampled_from(SPECIALS))
    RM = st.integers(0, 4)

    @given(a=BITS, b=BITS, rm=RM)
    @settings(max_examples=300, deadline=None)
    def test_binary_ops(self, a, b, rm):
        """add, sub, mul and div."""
        assert dut_fp.fadd(a, b, rm) == ref_fp.add(a, b, rm)
        assert dut_fp.fsub(a, b, rm) == ref_fp.add(a, b, rm, subtract=True)
        assert dut_fp.fmul(a, b, rm) == ref_fp.mul(a, b, rm)
        assert dut_fp.fdiv(a, b, rm) == ref_fp.div(a, b, rm)

    @given(a=BITS, b=BITS, c=BITS, rm=RM, negate_product=st.booleans(), negate_addend=st.booleans())
    @settings(max_examples=300, deadline=None)
    def test_fused(self, a, b, c, rm, negate_product, negate_addend):
        """Fused multiply-add in all four sign variants."""
        assert dut_fp.fma(a, b, c, rm, negate_product, negate_addend) == ref_fp.fused(
            a, b, c, rm, negate_product, negate_addend
        )

    @given(a=BITS, b=BITS, rm=RM)
    @settings(max_examples=300, deadline=None)
    def test_unary_and_compare(self, a, b, rm):
        """sqrt, conversions, classification, min/max and comparisons."""
        assert dut_fp.fsqrt(a, rm) == ref_fp.sqrt(a, rm)
        value, flags = ref_fp.to_int32(a, rm)
        assert dut_fp.fcvt_w_s(a, rm) == (sext(value, 32) & 0xFFFF_FFFF_FFFF_FFFF, flags)
        assert dut_fp.fcvt_s_w(a, rm) == ref_fp.from_int32(a, rm)
        assert dut_fp.fclass(a) == ref_fp.classify(a)
        assert dut_fp.fminmax(a, b, True) == ref_fp.min_max(a, b, maximum=True)
        assert dut_fp.fminmax(a, b, False) == ref_fp.min_max(a, b, maximum=False)
        for relation in ("eq", "lt", "le"):
            assert dut_fp.fcompare(a, b, relation) == ref_fp.compare(a, b, relation)

    def test_known_values(self):
        """A few hand-checked results."""
        assert dut_fp.fadd(ONE, ONE, 0) == (0x40000000, 0)
        assert dut_fp.fdiv(ONE, THREE, 0) == (0x3EAAAAAB, 0x01)
        assert dut_fp.fdiv(ONE, THREE, 1) == (0x3EAAAAAA, 0x01)
        assert dut_fp.fdiv(0, 0, 0) == (dut_fp.CANONICAL_NAN, 0x10)
        assert dut_fp.fdiv(ONE, 0, 0) == (INF, 0x08)
        assert dut_fp.fmul(0x7F7FFFFF, 0x40000000, 0) == (INF, 0x05)
        assert dut_fp.fmul(0x7F7FFFFF, 0x40000000, 1) == (0x7F7FFFFF, 0x05)
        assert dut_fp.fmul(0x00800000, 0x3F000000, 0) == (0x00400000, 0)
        assert dut_fp.fsub(ONE, ONE, 2) == (0x80000000, 0)


class TestLockstep:
    """Test lockstep runs without injected bugs."""

    def test_empty_iteration(self, library):
        """No blocks: completed immediately with nothing executed."""
        empty = FuzzIteration([], [], GlobalContext(library=library, code_base=CODE_BASE), 1)
        report = run_iteration(empty)
        assert report.outcome is Outcome.COMPLETED
        assert report.executed_count == 0
        assert report.prevalence == 0.0

    @pytest.mark.parametrize("seed", [1, 2, 3, 5, 8, 13])
    def test_no_false_mismatches(self, seed):
        """Bug-free random iterations never diverge."""
        report = run_iteration(generated(seed))
        assert report.outcome is not Outcome.MISMATCH
        assert report.executed_count > 0

    def test_no_false_mismatches_disabled_extensions(self):
        """Disabled extensions are skipped identically by both cores."""
        config = HarnessConfig(disabled_extensions=["F", "A"])
        for seed in (21, 22, 23):
            assert run_iteration(generated(seed), config).outcome is not Outcome.MISMATCH

    def test_x0_stays_zero(self):
        """Writes to x0 leave it zero and record no destination."""
        program = Assembler(CODE_BASE).emit("addi", rd="zero", rs1="zero", imm=5)
        execution = Execution(build(program), record_traces=True)
        execution.run()
        assert execution.dut.state.x[0] == 0 and execution.ref.state.x[0] == 0
        assert execution.dut_trace[0].rd is None

    def test_loop_guard(self):
        """A self-loop is broken after the taken ceiling."""
        program = Assembler(CODE_BASE).label("spin").branch("beq", "zero", "zero", "spin")
        config = HarnessConfig(loop_ceiling=10)
        execution = Execution(build(program), config, budget=1000)
        assert execution.run() is Outcome.COMPLETED
        assert execution.dut_lane.taken[CODE_BASE] == 11

    def test_budget_exhausted(self):
        """Without a loop guard the self-loop spends the whole budget."""
        program = Assembler(CODE_BASE).label("spin").branch("beq", "zero", "zero", "spin")
        config = HarnessConfig(loop_ceiling=None)
        report = run_iteration(build(program), config, budget=50)
        assert report.outcome is Outcome.BUDGET_EXHAUSTED
        assert report.steps == 50

    def test_prevalence_excludes_prologue(self):
        """Prologue instructions retire but are not fuzz instructions."""
        body = Assembler(CODE_BASE + 0x100)
        for _ in range(3):
            body.emit("addi", rd="a0", rs1="a0", imm=1)
        prologue = [asm("addi", rd="a1", rs1="zero", imm=9), asm("addi", rd="a2", rs1="zero", imm=4)]
        iteration = iteration_from_program(body.assemble(), CODE_BASE + 0x100, CODE_BASE, prologue=prologue)
        image = build_memory(iteration)
        assert image.is_prologue(CODE_BASE) and not image.is_fuzz_instruction(CODE_BASE)
        report = run_iteration(iteration)
        assert report.outcome is Outcome.COMPLETED
        assert report.fuzzing_instruction_count == report.retired_count - 3
        assert report.prevalence == report.fuzzing_instruction_count / report.executed_count

    @pytest.mark.parametrize("block_align", [4, 16])
    def test_fuzz_count_matches_block_membership(self, block_align):
        """Fuzz instructions are exactly the retired steps at fuzz block slots."""
        execution = Execution(generated(7, 400, block_align=block_align), record_traces=True)
        execution.run()
        report = execution.report()
        blocks = execution.dut.memory.block_addresses
        retired = [r.pc for r in execution.dut_trace if r.retired]
        assert report.retired_count == len(retired)
        assert report.fuzzing_instruction_count == sum(pc in blocks for pc in retired)

    def test_coverage_recorded(self, small_iteration):
        """The DUT shadow model feeds the coverage map."""
        instrumentation = Instrumentation.default()
        covmap = instrumentation.new_map()
        report = run_iteration(small_iteration, instrumentation=instrumentation, covmap=covmap)
        assert report.coverage_delta > 0
        assert report.coverage_delta == sum(covmap.n_cov(m) for m in covmap.modules)

    def test_shadow_deterministic(self, small_iteration):
        """Replaying an iteration yields the same coverage points in the same order."""
        instrumentation = Instrumentation.default()
        runs = []
        for _ in range(2):
            execution = Execution(small_iteration, instrumentation=instrumentation)
            execution.run()
            runs.append((execution.dut.new_points, execution.dut.covmap))
        assert runs[0][0] == runs[1][0]
        assert runs[0][1] == runs[1][1]

    def test_dependent_loop_reaches_sequence_state(self):
        """A mul/add/backward-branch kernel drives the sequence detector to its last state."""
        program = (
            Assembler(CODE_BASE)
            .li("a5", 400)
            .label("loop")
            .emit("addi", rd="a0", rs1="a0", imm=1)
            .emit("mul", rd="t2", rs1="a0", rs2="a0")
            .emit("add", rd="a3", rs1="t2", rs2="a0")
            .branch("bltu", "a3", "a5", "loop")
        )
        execution = Execution(build(program))
        states = []
        while execution.step():
            states.append(execution.dut.shadow.registers["seqdet"]["seq_state"])
        assert SEQ_LOOPED in states


class TestRecords:
    """Test step record comparison."""

    def test_compare_order(self):
        """pc is compared before everything else, then trap, rd and CSRs."""
        a = StepRecord(0, 0x10, 0x13, 0x14, 1, rd=("x5", 1), csrs={"fflags": 1})
        assert compare_records(a, dataclasses.replace(a, pc=0x20)).field == "pc"
        assert compare_records(a, dataclasses.replace(a, trap=2)).field == "trap"
        assert compare_records(a, dataclasses.replace(a, rd=("x5", 2))).field == "x5"
        assert compare_records(a, dataclasses.replace(a, rd=("f5", 1))).field == "rd"
        assert compare_records(a, dataclasses.replace(a, csrs={"fflags": 3})).field == "fflags"
        assert compare_records(a, dataclasses.replace(a, minstret=2)).field == "minstret"
        assert compare_records(a, a) is None

    def test_length_divergence(self):
        """A trace that stops early diverges at its length."""
        a = StepRecord(0, 0x10, 0x13, 0x14, 1)
        ordinal, diff = first_divergence([a], [])
        assert ordinal == 0 and diff.field == "length"


class TestBugs:
    """Test the bug catalog and detection of every injected bug."""

    def test_catalog_contents(self):
        """The catalog carries the modeled bugs and the control entry."""
        ids = catalog_ids()
        assert {"C1", "C2", "C7", "C10", "B1", "B2", "R1", "noop"} <= set(ids)

    def test_unknown_id(self):
        """Unknown ids raise a catalog error."""
        with pytest.raises(CatalogError):
            get_bug("Z9")

    def test_inject_bug(self):
        """inject_bug registers the fault on the DUT only."""
        image = build_memory(build(Assembler(CODE_BASE).emit("addi", rd="a0", rs1="zero", imm=1)))
        dut = inject_bug(DutCore(image), "C1")
        assert [b.id for b in dut.bugs] == ["C1"]

    @pytest.mark.parametrize("bug_id", sorted(FAULTY_WORD))
    def test_detected_at_ground_truth(self, bug_id):
        """The lockstep run reports the first divergence of the offline trace diff."""
        iteration = build(bug_program(bug_id))
        report = run_iteration(iteration, bugs=[bug_id])
        truth = ground_truth(iteration, bugs=[bug_id])
        assert report.outcome is Outcome.MISMATCH
        assert truth is not None
        assert report.mismatch.ordinal == truth[0]
        assert report.mismatch.field == truth[1].field == EXPECTED_FIELD[bug_id]
        assert report.mismatch.word == FAULTY_WORD[bug_id]

    @pytest.mark.parametrize("bug_id", sorted(FAULTY_WORD))
    def test_catalog_field_matches(self, bug_id):
        """The catalog's expected field describes what is detected."""
        field = get_bug(bug_id).field
        if field == "rd":
            assert EXPECTED_FIELD[bug_id][0] in "xf"
        else:
            assert EXPECTED_FIELD[bug_id] == field

    @pytest.mark.parametrize("bug_id", sorted(FAULTY_WORD))
    def test_clean_without_bug(self, bug_id):
        """The same programs run clean without the bug."""
        assert run_iteration(build(bug_program(bug_id))).outcome is Outcome.COMPLETED

    def test_noop_control(self):
        """The no-op entry never causes a mismatch."""
        for seed in (31, 32, 33, 34):
            assert run_iteration(generated(seed), bugs=["noop"]).outcome is not Outcome.MISMATCH

    def test_config_bugs_used(self):
        """Bugs listed in the harness config are injected by default."""
        config = HarnessConfig(bugs=["R1"])
        report = run_iteration(build(bug_program("R1")), config)
        assert report.mismatch is not None and report.mismatch.field == "minstret"

    def test_traces_equal_before_divergence(self):
        """Full traces agree on every step before the reported ordinal."""
        iteration = build(bug_program("C2"))
        dut_trace, ref_trace = trace_run(iteration, bugs=["C2"])
        ordinal, _ = first_divergence(dut_trace, ref_trace)
        assert trace_digest(dut_trace[:ordinal]) == trace_digest(ref_trace[:ordinal])


class TestSnapshot:
    """Test snapshot and restore."""

    def test_reset_snapshot(self, small_iteration):
        """A snapshot before the first step equals the canonical reset snapshot."""
        assert take_snapshot(Execution(small_iteration)) == reset_snapshot(small_iteration)

    def test_restore_reproduces_suffix(self, small_iteration, tmp_path):
        """Restoring a mid-run snapshot replays the remaining trace exactly."""
        full = Execution(small_iteration, record_traces=True)
        full.run()
        middle = len(full.dut_trace) // 2
        partial = Execution(small_iteration)
        partial.run(until=middle)
        path = take_snapshot(partial).write(tmp_path / "mid.snap.json.gz")

        resumed = restore(ArchSnapshot.load(path), small_iteration, record_traces=True)
        assert resumed.ordinal == middle
        assert resumed.run() is full.outcome
        assert trace_digest(resumed.dut_trace) == trace_digest(full.dut_trace[middle:])
        assert trace_digest(resumed.ref_trace) == trace_digest(full.ref_trace[middle:])
        assert resumed.dut.shadow.registers == full.dut.shadow.registers

    def test_restore_wrong_iteration(self, small_iteration):
        """A snapshot only restores onto the image it came from."""
        snapshot = take_snapshot(Execution(small_iteration))
        with pytest.raises(ContractError):
            restore(snapshot, generated(99))

    def test_snapshot_at_mismatch(self, tmp_path):
        """The mismatch snapshot carries the mismatching ordinal."""
        report = run_iteration(build(bug_program("C1")), bugs=["C1"], snapshot_dir=tmp_path)
        assert report.mismatch.snapshot_path is not None
        snapshot = ArchSnapshot.load(report.mismatch.snapshot_path)
        assert snapshot.mismatch_ordinal == report.mismatch.ordinal
        assert snapshot.ordinal == report.mismatch.ordinal + 1

    def test_unsupported_version(self, small_iteration):
        """Documents with another version are refused."""
        document = take_snapshot(Execution(small_iteration)).to_dict()
        document["version"] = 99
        with pytest.raises(ContractError):
            ArchSnapshot.from_dict(document)


@pytest.mark.slow
class TestPrevalence:
    """Directional prevalence checks on full-size iterations."""

    def test_constrained_prevalence(self):
        """Constrained 4000-instruction iterations keep mean prevalence at or above 0.9."""
        prevalences = []
        for seed in range(1, 101):
            execution = Execution(generated(seed, 4000), record_traces=True)
            execution.run()
            report = execution.report()
            assert report.outcome is not Outcome.MISMATCH
            blocks = execution.dut.memory.block_addresses
            in_blocks = sum(r.retired and r.pc in blocks for r in execution.dut_trace)
            assert report.fuzzing_instruction_count == in_blocks
            prevalences.append(report.prevalence)
        assert statistics.mean(prevalences) >= 0.9

    def test_unconstrained_executed_fraction(self):
        """Unconstrained forward jumps leave most generated instructions unexecuted."""
        reports = [run_iteration(generated(seed, 4000, jump_range=None)) for seed in range(1, 101)]
        assert statistics.mean(r.executed_fraction for r in reports) <= 0.5

    def test_bug_free_sweep(self):
        """Ten thousand bug-free iterations stay mismatch free."""
        for seed in range(100, 10_100):
            assert run_iteration(generated(seed)).outcome is not Outcome.MISMATCH
