"""rv-loopfuzz - closed-loop coverage-guided fuzzing of RISC-V instruction streams.

Provides:
- Instruction library, encoder/decoder and instruction blocks (``rvloopfuzz.isa``)
- LFSR-driven generation and mutation of fuzz iterations (``rvloopfuzz.genmut``)
- Coverage-scored corpus scheduling (``rvloopfuzz.corpus``)
- Register-coverage instrumentation over a netlist IR (``rvloopfuzz.coverage``)
- Lockstep DUT/reference execution with bug injection (``rvloopfuzz.harness``)
- Benchmark-interval hybrid exploration (``rvloopfuzz.hybrid``)
- Campaign orchestration and the ``rvloopfuzz`` CLI (``rvloopfuzz.campaign``)
"""

from .logging import configure_logging, get_logger

from .models import (
    CampaignConfig,
    CampaignStats,
    ModeConfig,
    RunReport,
)

from .validation import (
    FuzzerError,
    ValidationError,
    ConfigurationError,
    EncodingRangeError,
    ArityError,
    SeedError,
    DomainError,
    CorpusLookupError,
    ContractError,
    BoundError,
    CatalogError,
    SynthesisError,
    MergeError,
)

__version__ = "0.3.0"
__license__ = "MIT"

__all__ = [
    # Logging
    "configure_logging",
    "get_logger",
    # Models
    "CampaignConfig",
    "CampaignStats",
    "ModeConfig",
    "RunReport",
    # Errors
    "FuzzerError",
    "ValidationError",
    "ConfigurationError",
    "EncodingRangeError",
    "ArityError",
    "SeedError",
    "DomainError",
    "CorpusLookupError",
    "ContractError",
    "BoundError",
    "CatalogError",
    "SynthesisError",
    "MergeError",
]
