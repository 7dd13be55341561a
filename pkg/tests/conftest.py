"""Shared test fixtures and configuration."""

import pytest

from rvloopfuzz.genmut import Lfsr, MemoryPolicy, generate_iteration
from rvloopfuzz.isa import default_library
from rvloopfuzz.models import CampaignConfig, HarnessConfig, ModeConfig


@pytest.fixture
def library():
    """Bundled instruction library, every category enabled."""
    return default_library()


@pytest.fixture
def i_only_library(library):
    """Library restricted to the base integer subset."""
    return library.with_enabled(["I"])


@pytest.fixture
def lfsr():
    """Deterministic 32-bit LFSR."""
    return Lfsr(0xACE1, 32)


@pytest.fixture
def mode_config():
    """Mode config sized for unit tests."""
    return ModeConfig(instructions_per_iteration=200)


@pytest.fixture
def harness_config():
    """Default memory layout and guards."""
    return HarnessConfig()


@pytest.fixture
def policy(mode_config, harness_config):
    """Operand-assignment policy over the default layout."""
    return MemoryPolicy.from_configs(mode_config, harness_config)


@pytest.fixture
def small_iteration(mode_config, library, policy):
    """A generated 200-instruction iteration."""
    return generate_iteration(mode_config, library, Lfsr(0x1234, 32), policy)


@pytest.fixture
def campaign_config(tmp_path):
    """A tiny single-shard campaign writing into a temp directory."""
    return CampaignConfig(
        mode=ModeConfig(instructions_per_iteration=120),
        budget={"iterations": 6},
        master_seed=7,
        output_dir=str(tmp_path / "run"),
        log_format="console",
    )
