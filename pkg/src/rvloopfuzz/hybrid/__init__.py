"""Hybrid exploration: benchmark-interval seeding followed by init-state refinement."""

from .bbv import Bbv, bbv_matrix, compute_bbvs, trace_leaders
from .cluster import ClusterResult, cluster_bbvs
from .benchmarks import (
    Benchmark,
    benchmark_names,
    build_benchmark,
    bundled_benchmarks,
    load_manifest,
)
from .context import (
    BenchmarkTrace,
    CapturedContext,
    ReplayCursor,
    benchmark_iteration,
    capture_context,
    context_diff,
    enabled_extensions,
    program_layout,
    synthesize_init,
    trace_benchmark,
    tracing_config,
)
from .stage1 import (
    IntervalReport,
    RepInterval,
    Stage1Result,
    extract_intervals,
    interval_seed_iteration,
    run_interval,
    run_stage1,
)
from .stage2 import (
    Param,
    ParamKind,
    Refinement,
    Stage2Result,
    apply_perturbation,
    dependency_graph,
    opcode_sequence,
    perturbation_parameters,
    run_stage2,
)

__all__ = [
    # Basic block vectors and clustering
    "Bbv",
    "bbv_matrix",
    "compute_bbvs",
    "trace_leaders",
    "ClusterResult",
    "cluster_bbvs",
    # Benchmarks
    "Benchmark",
    "benchmark_names",
    "build_benchmark",
    "bundled_benchmarks",
    "load_manifest",
    # Context capture and prologues
    "BenchmarkTrace",
    "CapturedContext",
    "ReplayCursor",
    "benchmark_iteration",
    "capture_context",
    "context_diff",
    "enabled_extensions",
    "program_layout",
    "synthesize_init",
    "trace_benchmark",
    "tracing_config",
    # Stage 1
    "IntervalReport",
    "RepInterval",
    "Stage1Result",
    "extract_intervals",
    "interval_seed_iteration",
    "run_interval",
    "run_stage1",
    # Stage 2
    "Param",
    "ParamKind",
    "Refinement",
    "Stage2Result",
    "apply_perturbation",
    "dependency_graph",
    "opcode_sequence",
    "perturbation_parameters",
    "run_stage2",
]
