"""Tests for campaign configuration, random streams, the fuzz loop, reports, merge and the CLI."""

import io
import json
from importlib import resources

import pytest

from rvloopfuzz.campaign import (
    CSV_COLUMNS,
    Streams,
    apply_env_overrides,
    derive_seed,
    effective_config_json,
    emit_report,
    load_campaign_config,
    load_stats,
    merge_shards,
    merge_stats,
    run_campaign,
    stats_csv,
)
from rvloopfuzz.campaign.cli import EXIT_CLEAN, EXIT_CONFIG, EXIT_MISMATCH, main
from rvloopfuzz.campaign.runner import COVERAGE_MAP
from rvloopfuzz.coverage import CoverageMap
from rvloopfuzz.genmut import save_iteration
from rvloopfuzz.models import (
    BudgetConfig,
    CampaignConfig,
    CampaignStats,
    CorpusPolicy,
    HarnessConfig,
    HybridConfig,
    IterationRecord,
    Mismatch,
    ModeConfig,
    Outcome,
    RunReport,
)
from rvloopfuzz.validation import ConfigurationError, MergeError, ValidationError

SEQUENCE_POINT = ("seqdet", 3)

SMALL_HYBRID = HybridConfig(
    enabled=True,
    benchmarks=["polyseq"],
    benchmark_scale=0.05,
    interval_len=100,
    k=3,
    max_budget_fraction=1.0,
    max_variants=8,
)


def write_config(path, config):
    path.write_text(json.dumps(config.model_dump(mode="json")), encoding="utf-8")
    return path


def make_stats(shard, key_lists, hybrid_keys=(), config_hash="h"):
    """Stats whose cumulative columns follow the campaign loop's accounting."""
    covered = set(hybrid_keys)
    instructions = 50
    records = []
    for ordinal, keys in enumerate(key_lists):
        fresh = [k for k in keys if k not in covered]
        covered.update(fresh)
        instructions += 100
        records.append(
            IterationRecord(
                ordinal=ordinal,
                mode="direct",
                executed=100,
                fuzz_instructions=95,
                prevalence=0.95,
                new_points=len(fresh),
                new_point_keys=fresh,
                cumulative_coverage=len(covered),
                cumulative_instructions=instructions,
                corpus_action="inserted" if fresh else "rejected",
                outcome=Outcome.COMPLETED,
            )
        )
    return CampaignStats(
        config_hash=config_hash,
        shards=[shard],
        records=records,
        final_coverage=len(covered),
        corpus_size=len([r for r in records if r.new_points]),
        hybrid_point_keys=sorted(hybrid_keys),
        hybrid_instructions=50,
    )


def fake_mismatch(iteration, *args, **kwargs):
    """Stands in for the lockstep run: every iteration diverges at step 3."""
    return RunReport(
        executed_count=10,
        fuzzing_instruction_count=10,
        retired_count=10,
        steps=4,
        outcome=Outcome.MISMATCH,
        mismatch=Mismatch(
            ordinal=3, pc=0x1000_000C, word=0x13, field="x5", dut_value="0x1", ref_value="0x2"
        ),
    )


@pytest.fixture
def clean_env(tmp_path, monkeypatch):
    """No .env file and no RVLOOPFUZZ_* variables in the process environment."""
    monkeypatch.chdir(tmp_path)
    for name in ("RVLOOPFUZZ_MASTER_SEED", "RVLOOPFUZZ_OUTPUT_DIR", "RVLOOPFUZZ_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    return tmp_path


@pytest.fixture(scope="module")
def two_shards(tmp_path_factory):
    """Two shards of one small campaign."""
    root = tmp_path_factory.mktemp("shards")
    config = CampaignConfig(
        mode=ModeConfig(instructions_per_iteration=120),
        budget={"iterations": 5},
        master_seed=11,
        shards=2,
        output_dir=str(root),
    )
    return [run_campaign(config, shard) for shard in range(2)]


class TestStreams:
    """Test per-component seed derivation."""

    def test_deterministic(self):
        """The same key always derives the same seed."""
        assert derive_seed(42, 0, "generation") == derive_seed(42, 0, "generation")

    def test_components_and_shards_differ(self):
        """Components and shards get distinct streams."""
        seeds = {
            derive_seed(42, shard, component)
            for shard in range(4)
            for component in ("mode", "generation", "mutation", "selection", "data")
        }
        assert len(seeds) == 20

    def test_nonzero_within_width(self):
        """Derived seeds are valid LFSR seeds for their width."""
        for master in range(200):
            seed = derive_seed(master, 0, "data", 8)
            assert 0 < seed < 256

    def test_streams_reproducible(self):
        """Two derivations from one master seed draw identical sequences."""
        a, b = Streams.derive(9, 1), Streams.derive(9, 1)
        assert [a.generation.next_bits(16) for _ in range(10)] == [
            b.generation.next_bits(16) for _ in range(10)
        ]
        assert a.clustering == b.clustering
        assert 0 < a.clustering < 2**31


class TestConfigLoading:
    """Test config files, validation reporting and environment overrides."""

    def test_load_roundtrip(self, tmp_path, campaign_config):
        """A dumped config loads back equal."""
        path = write_config(tmp_path / "c.json", campaign_config)
        assert CampaignConfig.load(path) == campaign_config

    def test_every_invalid_field_reported(self, tmp_path):
        """All rejected fields are listed at once, dotted."""
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps({"mode": {"p_mutation": 2}, "corpus": {"capacity": 0}, "bogus": 1}),
            encoding="utf-8",
        )
        with pytest.raises(ValidationError) as exc:
            CampaignConfig.load(path)
        fields = exc.value.details["fields"]
        assert "mode.p_mutation" in fields
        assert "corpus.capacity" in fields
        assert "bogus" in fields

    def test_missing_file(self, tmp_path):
        """An unreadable file is a configuration error."""
        with pytest.raises(ConfigurationError):
            CampaignConfig.load(tmp_path / "absent.json")

    def test_not_an_object(self, tmp_path):
        """A JSON document that is not an object is rejected."""
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            CampaignConfig.load(path)

    def test_env_overrides(self, campaign_config):
        """RVLOOPFUZZ_* variables replace their fields."""
        config = apply_env_overrides(
            campaign_config,
            {"RVLOOPFUZZ_MASTER_SEED": "99", "RVLOOPFUZZ_LOG_LEVEL": "debug"},
        )
        assert config.master_seed == 99
        assert config.log_level == "DEBUG"
        assert config.output_dir == campaign_config.output_dir

    def test_bad_override(self, campaign_config):
        """An override that does not parse names its variable."""
        with pytest.raises(ConfigurationError) as exc:
            apply_env_overrides(campaign_config, {"RVLOOPFUZZ_MASTER_SEED": "many"})
        assert exc.value.details["config_key"] == "RVLOOPFUZZ_MASTER_SEED"

    def test_dotenv_file(self, clean_env, campaign_config):
        """A dotenv file feeds overrides; the process environment wins over it."""
        env_file = clean_env / "campaign.env"
        env_file.write_text("RVLOOPFUZZ_MASTER_SEED=5\nRVLOOPFUZZ_OUTPUT_DIR=out\n")
        path = write_config(clean_env / "c.json", campaign_config)
        config = load_campaign_config(path, env_file, environ={"RVLOOPFUZZ_MASTER_SEED": "6"})
        assert config.master_seed == 6
        assert config.output_dir == "out"

    def test_missing_env_file(self, clean_env):
        """Naming an env file that does not exist is an error."""
        with pytest.raises(ConfigurationError):
            load_campaign_config(None, clean_env / "absent.env")

    def test_effective_config_has_hash(self, campaign_config):
        """The printed config carries the hash of the result-affecting fields."""
        document = json.loads(effective_config_json(campaign_config))
        assert document["config_hash"] == campaign_config.config_hash()
        assert document["master_seed"] == campaign_config.master_seed

    def test_hash_ignores_output_and_logging(self, campaign_config):
        """Moving the output or changing log settings keeps the hash."""
        moved = campaign_config.model_copy(update={"output_dir": "elsewhere", "log_level": "DEBUG"})
        reseeded = campaign_config.model_copy(update={"master_seed": 8})
        assert moved.config_hash() == campaign_config.config_hash()
        assert reseeded.config_hash() != campaign_config.config_hash()


@pytest.mark.integration
class TestRunCampaign:
    """Test the campaign loop and its artifacts."""

    def test_zero_budget(self, campaign_config):
        """No iterations give an empty curve and valid artifacts."""
        config = campaign_config.model_copy(update={"budget": BudgetConfig(iterations=0)})
        result = run_campaign(config)
        assert result.stats.records == []
        assert result.stats.coverage_curve == []
        assert result.stats.final_coverage == 0
        assert (result.directory / "stats.csv").read_text().splitlines() == [",".join(CSV_COLUMNS)]
        assert load_stats(result.directory) == result.stats
        assert CoverageMap.load(result.directory / COVERAGE_MAP).total == 0

    def test_records_and_accounting(self, campaign_config):
        """One record per iteration with monotone cumulative columns."""
        result = run_campaign(campaign_config)
        stats = result.stats
        assert [r.ordinal for r in stats.records] == list(range(6))
        curve = stats.coverage_curve
        assert curve == sorted(curve)
        assert curve[-1] == stats.final_coverage == result.covmap.total
        assert stats.records[-1].cumulative_instructions == sum(r.executed for r in stats.records)
        assert sum(r.new_points for r in stats.records) == stats.final_coverage
        for record in stats.records:
            assert record.mode in {"direct", "mutation"}
            assert record.corpus_action in {"inserted", "replaced", "rejected", "updated"}
            assert len(record.new_point_keys) == record.new_points
        assert len(result.corpus) <= campaign_config.corpus.capacity
        assert stats.corpus_size == len(result.corpus)

    def test_artifacts_written(self, campaign_config):
        """Stats, coverage map, corpus, timing and the effective config are on disk."""
        result = run_campaign(campaign_config)
        for name in ("stats.json", "stats.csv", COVERAGE_MAP, "timing.json", "config.json"):
            assert (result.directory / name).is_file()
        assert (result.directory / "corpus" / "index.json").is_file()
        assert CoverageMap.load(result.directory / COVERAGE_MAP) == result.covmap
        timing = json.loads((result.directory / "timing.json").read_text())
        assert timing["iterations"] == 6

    def test_byte_identical_reruns(self, campaign_config, tmp_path):
        """The same config and seed reproduce every deterministic artifact byte for byte."""
        first = run_campaign(campaign_config, output_dir=tmp_path / "a")
        second = run_campaign(campaign_config, output_dir=tmp_path / "b")
        for name in ("stats.json", "stats.csv", COVERAGE_MAP, "corpus/index.json"):
            assert (first.directory / name).read_bytes() == (second.directory / name).read_bytes()

    def test_seed_changes_results(self, campaign_config, tmp_path):
        """A different master seed produces a different run."""
        first = run_campaign(campaign_config, output_dir=tmp_path / "a")
        other = campaign_config.model_copy(update={"master_seed": 8})
        second = run_campaign(other, output_dir=tmp_path / "b")
        assert first.stats.records != second.stats.records

    def test_instruction_budget(self, campaign_config):
        """The instruction budget stops the loop after the iteration that spends it."""
        config = campaign_config.model_copy(
            update={"budget": BudgetConfig(iterations=100, instructions=1)}
        )
        assert len(run_campaign(config).stats.records) == 1

    def test_mismatches_recorded(self, campaign_config, monkeypatch):
        """Mismatching iterations keep running and leave a dump and a report each."""
        monkeypatch.setattr("rvloopfuzz.campaign.runner.run_iteration", fake_mismatch)
        result = run_campaign(campaign_config)
        assert len(result.stats.records) == 6
        assert len(result.stats.mismatches) == 6
        first = result.stats.mismatches[0]
        assert first.snapshot_path == "mismatches/iter-000000.snap.json.gz"
        assert (result.directory / "mismatches" / "iter-000000.bin").is_file()
        assert (result.directory / "mismatches" / "iter-000000.json").is_file()

    def test_halt_on_first_mismatch(self, campaign_config, monkeypatch):
        """Halting stops the campaign right after the first mismatch."""
        monkeypatch.setattr("rvloopfuzz.campaign.runner.run_iteration", fake_mismatch)
        harness = HarnessConfig(halt_on_first_mismatch=True)
        result = run_campaign(campaign_config.model_copy(update={"harness": harness}))
        assert len(result.stats.records) == 1
        assert result.stats.records[0].outcome is Outcome.MISMATCH

    def test_hybrid_seeding(self, campaign_config):
        """Hybrid stages run first, cover the sequence point and are charged to the budget."""
        config = campaign_config.model_copy(
            update={"hybrid": SMALL_HYBRID, "budget": BudgetConfig(iterations=2)}
        )
        result = run_campaign(config)
        stats = result.stats
        assert SEQUENCE_POINT in stats.hybrid_point_keys
        assert stats.hybrid_instructions == result.stage1.instructions + result.stage2.instructions
        first = stats.records[0]
        assert first.cumulative_instructions == stats.hybrid_instructions + first.executed
        assert first.cumulative_coverage == stats.hybrid_points + first.new_points
        assert (result.directory / "intervals.json").is_file()


class TestReports:
    """Test the CSV and JSON stats documents."""

    def test_empty_stats_header_only(self, tmp_path):
        """Empty stats render as the header line alone."""
        path = emit_report(CampaignStats(config_hash="h"), tmp_path / "s.csv", "csv")
        assert path.read_text().splitlines() == [",".join(CSV_COLUMNS)]

    def test_csv_row_count(self):
        """One row per record plus the header."""
        stats = make_stats(0, [[("fpu", 1)], [], [("lsu", 2), ("fpu", 1)]])
        assert len(stats_csv(stats).splitlines()) == len(stats.records) + 1

    def test_json_roundtrip(self, tmp_path):
        """Reloading an emitted JSON document gives the same stats."""
        stats = make_stats(0, [[("fpu", 1)], [("lsu", 2)]], hybrid_keys=[("seqdet", 3)])
        path = emit_report(stats, tmp_path, "json")
        assert path.name == "stats.json"
        assert load_stats(path) == stats

    def test_not_a_stats_document(self, tmp_path):
        """Foreign JSON is a validation error."""
        path = tmp_path / "other.json"
        path.write_text('{"records": 5}', encoding="utf-8")
        with pytest.raises(ValidationError):
            load_stats(path)

    def test_unwritable_path(self, tmp_path):
        """A path below a regular file cannot be written."""
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit_report(CampaignStats(config_hash="h"), blocker / "stats.csv", "csv")


class TestMergeStats:
    """Test the union timeline of shard statistics."""

    def test_identity(self):
        """Merging a single shard returns it unchanged."""
        stats = make_stats(0, [[("fpu", 1)], [("fpu", 2), ("lsu", 0)]], [("seqdet", 3)])
        assert merge_stats([stats]) == stats

    def test_commutative(self):
        """Argument order does not matter."""
        a = make_stats(0, [[("fpu", 1)], [("lsu", 4)]])
        b = make_stats(1, [[("fpu", 1), ("muldiv", 2)], [("lsu", 5)]], [("seqdet", 3)])
        assert merge_stats([a, b]) == merge_stats([b, a])

    def test_union_timeline(self):
        """Points covered by several shards count once; the curve stays monotone."""
        a = make_stats(0, [[("fpu", 1)], [("lsu", 4)]])
        b = make_stats(1, [[("fpu", 1)], [("fpu", 2)]])
        merged = merge_stats([a, b])
        assert merged.final_coverage == 3
        assert [r.new_points for r in merged.records] == [1, 0, 1, 1]
        assert merged.coverage_curve == [1, 1, 2, 3]
        assert merged.shards == [0, 1]
        assert merged.records[-1].cumulative_instructions == 100 + 4 * 100

    def test_config_mismatch(self):
        """Shards of different configurations do not merge."""
        with pytest.raises(MergeError):
            merge_stats([make_stats(0, [], config_hash="a"), make_stats(1, [], config_hash="b")])

    def test_nothing_to_merge(self):
        """An empty merge is an error."""
        with pytest.raises(MergeError):
            merge_stats([])


@pytest.mark.integration
class TestMergeShards:
    """Test merging shard directories."""

    def test_identity(self, two_shards):
        """Merging one shard reproduces its stats and map."""
        shard = two_shards[0]
        view = merge_shards([shard.directory])
        assert view.stats == shard.stats
        assert view.covmap == shard.covmap

    def test_commutative(self, two_shards):
        """Swapping shard order gives bit-equal maps and equal stats."""
        dirs = [s.directory for s in two_shards]
        forward, backward = merge_shards(dirs), merge_shards(dirs[::-1])
        assert forward.covmap == backward.covmap
        assert forward.stats == backward.stats

    def test_recount(self, two_shards):
        """Merged N_cov equals the popcount of the OR'd bitmaps and the timeline's end."""
        view = merge_shards([s.directory for s in two_shards])
        for module in view.covmap.modules:
            assert view.covmap.n_cov(module) == view.covmap.popcount(module)
            expected = set(two_shards[0].covmap.covered(module)) | set(
                two_shards[1].covmap.covered(module)
            )
            assert view.covmap.n_cov(module) == len(expected)
        assert view.stats.final_coverage == view.covmap.total

    def test_writes_output(self, two_shards, tmp_path):
        """Merged artifacts land in the output directory."""
        view = merge_shards([s.directory for s in two_shards], tmp_path / "merged")
        assert load_stats(tmp_path / "merged") == view.stats
        assert CoverageMap.load(tmp_path / "merged" / COVERAGE_MAP) == view.covmap
        assert len(view.corpus) <= two_shards[0].corpus.capacity

    def test_hash_mismatch(self, tmp_path):
        """Stats from different configurations refuse to merge."""
        for name, digest in (("a", "1"), ("b", "2")):
            emit_report(make_stats(0, [], config_hash=digest), tmp_path / name / "stats.json", "json")
        with pytest.raises(MergeError):
            merge_shards([tmp_path / "a", tmp_path / "b"])


@pytest.mark.integration
class TestCli:
    """Test the command line verbs and exit codes."""

    def test_print_effective_config(self, clean_env, campaign_config):
        """Overrides from an env file show up in the printed config."""
        path = write_config(clean_env / "c.json", campaign_config)
        (clean_env / "run.env").write_text("RVLOOPFUZZ_MASTER_SEED=99\n")
        out = io.StringIO()
        argv = ["fuzz", "-c", str(path), "--env-file", str(clean_env / "run.env")]
        code = main(argv + ["--print-effective-config"], out)
        assert code == EXIT_CLEAN
        document = json.loads(out.getvalue())
        assert document["master_seed"] == 99
        assert "config_hash" in document

    def test_invalid_config_exit_code(self, clean_env):
        """Validation failures exit with the configuration code."""
        path = clean_env / "bad.json"
        path.write_text(json.dumps({"mode": {"p_gen": 0.9}}), encoding="utf-8")
        assert main(["fuzz", "-c", str(path)], io.StringIO()) == EXIT_CONFIG

    def test_missing_config_exit_code(self, clean_env):
        """A missing config file exits with the configuration code."""
        assert main(["fuzz", "-c", str(clean_env / "absent.json")], io.StringIO()) == EXIT_CONFIG

    def test_fuzz_clean(self, clean_env, campaign_config):
        """A bug-free campaign exits clean and prints its summary."""
        path = write_config(clean_env / "c.json", campaign_config)
        out = io.StringIO()
        assert main(["fuzz", "-c", str(path)], out) == EXIT_CLEAN
        summary = json.loads(out.getvalue())
        assert summary["shards"]["0"]["iterations"] == 6

    def test_fuzz_mismatch_exit_code(self, clean_env, campaign_config, monkeypatch):
        """Mismatches found make the campaign exit with 1."""
        monkeypatch.setattr("rvloopfuzz.campaign.runner.run_iteration", fake_mismatch)
        path = write_config(clean_env / "c.json", campaign_config)
        assert main(["fuzz", "-c", str(path)], io.StringIO()) == EXIT_MISMATCH

    def test_fuzz_all_shards_merges(self, clean_env, campaign_config):
        """Running every shard also writes the merged view."""
        config = campaign_config.model_copy(
            update={"shards": 2, "budget": BudgetConfig(iterations=2)}
        )
        path = write_config(clean_env / "c.json", config)
        out = io.StringIO()
        assert main(["fuzz", "-c", str(path)], out) == EXIT_CLEAN
        summary = json.loads(out.getvalue())
        assert sorted(summary["shards"]) == ["0", "1"]
        assert (clean_env / "run" / "merged" / "stats.json").is_file()

    def test_shard_out_of_range(self, clean_env, campaign_config):
        """Asking for a shard the config does not have is a configuration error."""
        path = write_config(clean_env / "c.json", campaign_config)
        assert main(["fuzz", "-c", str(path), "--shard", "3"], io.StringIO()) == EXIT_CONFIG

    def test_report_verb(self, tmp_path):
        """The report verb renders stats as CSV on the output stream."""
        stats = make_stats(0, [[("fpu", 1)], []])
        emit_report(stats, tmp_path / "stats.json", "json")
        out = io.StringIO()
        assert main(["report", str(tmp_path / "stats.json"), "--format", "csv"], out) == 0
        assert out.getvalue() == stats_csv(stats)

    def test_merge_verb_hash_mismatch(self, tmp_path):
        """Merging incompatible shards exits with the configuration code."""
        for name, digest in (("a", "1"), ("b", "2")):
            emit_report(make_stats(0, [], config_hash=digest), tmp_path / name / "stats.json", "json")
        argv = ["merge", str(tmp_path / "a"), str(tmp_path / "b"), "-o", str(tmp_path / "m")]
        assert main(argv, io.StringIO()) == EXIT_CONFIG

    def test_replay_clean(self, clean_env, small_iteration):
        """Replaying a bug-free dump runs without a mismatch."""
        dump = save_iteration(small_iteration, clean_env / "iter.bin")
        out = io.StringIO()
        assert main(["replay", str(dump)], out) == EXIT_CLEAN
        report = json.loads(out.getvalue())
        assert report["outcome"] in {"completed", "budget_exhausted", "abandoned"}
        assert report["mismatch"] is None

    def test_instrument_bundled_netlist(self):
        """The instrument verb prints reachability per module."""
        netlist = resources.files("rvloopfuzz.coverage").joinpath("data/core.netlist")
        out = io.StringIO()
        with resources.as_file(netlist) as path:
            assert main(["instrument", str(path)], out) == EXIT_CLEAN
        document = json.loads(out.getvalue())
        seqdet = document["modules"]["seqdet"]
        assert seqdet["reachable"] <= seqdet["instrumented"]

    def test_explore_alias(self, clean_env, campaign_config):
        """The explore alias runs stage 1 and writes the interval report."""
        config = campaign_config.model_copy(update={"hybrid": SMALL_HYBRID})
        path = write_config(clean_env / "c.json", config)
        out = io.StringIO()
        assert main(["explore", "-c", str(path)], out) == EXIT_CLEAN
        summary = json.loads(out.getvalue())
        assert summary["intervals"] >= 1
        assert (clean_env / "run" / "shard-00" / "intervals.json").is_file()


@pytest.mark.slow
class TestDirectionalAcceptance:
    """Directional desk-scale comparisons; long running."""

    TRIALS = 10

    def base_config(self, tmp_path, seed, **updates):
        config = CampaignConfig(
            mode=ModeConfig(instructions_per_iteration=400),
            master_seed=seed,
            output_dir=str(tmp_path / f"run-{seed}"),
        )
        return config.model_copy(update=updates)

    def test_coverage_policy_beats_fifo(self, tmp_path):
        """Coverage-scored eviction ends at least as high as FIFO in most paired trials."""
        wins = 0
        for seed in range(1, self.TRIALS + 1):
            budget = BudgetConfig(iterations=5000)
            scored = self.base_config(tmp_path / "cov", seed, budget=budget)
            fifo = scored.model_copy(
                update={"corpus": scored.corpus.model_copy(update={"policy": CorpusPolicy.FIFO})}
            )
            fifo = fifo.model_copy(update={"output_dir": str(tmp_path / "fifo" / str(seed))})
            a = run_campaign(scored).stats.final_coverage
            b = run_campaign(fifo).stats.final_coverage
            wins += a >= b
        assert wins >= 8

    def test_hybrid_reaches_sequence_point_fuzzing_misses(self, tmp_path):
        """Stage 1 covers the sequence point; fuzzing alone on the same budget rarely does."""
        hybrid = run_campaign(
            self.base_config(tmp_path, 1, hybrid=SMALL_HYBRID, budget=BudgetConfig(iterations=0))
        )
        assert hybrid.covmap.is_covered(*SEQUENCE_POINT)
        spent = hybrid.stats.hybrid_instructions
        misses = 0
        for seed in range(1, self.TRIALS + 1):
            budget = BudgetConfig(iterations=10_000, instructions=spent)
            fuzz = run_campaign(self.base_config(tmp_path / "fuzz", seed, budget=budget))
            misses += not fuzz.covmap.is_covered(*SEQUENCE_POINT)
        assert misses >= 8

    def test_hybrid_coverage_at_least_fuzzing(self, tmp_path):
        """With equal instruction budgets the hybrid campaign ends at least as high."""
        wins = 0
        for seed in range(1, self.TRIALS + 1):
            budget = BudgetConfig(iterations=10_000, instructions=200_000)
            hybrid = self.base_config(tmp_path / "h", seed, hybrid=SMALL_HYBRID, budget=budget)
            plain = self.base_config(tmp_path / "f", seed, budget=budget)
            wins += (
                run_campaign(hybrid).stats.final_coverage
                >= run_campaign(plain).stats.final_coverage
            )
        assert wins >= 8
