"""Tests for validation utilities and exceptions."""

import pytest

from rvloopfuzz.validation import (
    ConfigurationError,
    CorpusLookupError,
    FuzzerError,
    MergeError,
    SeedError,
    ValidationError,
    validate_alignment,
    validate_positive,
)


class TestFuzzerError:
    """Test the base exception."""

    def test_exception_to_dict(self):
        """Code and message serialize; empty details are omitted."""
        exc = FuzzerError("Test error", code=1234)
        assert exc.to_dict() == {"code": 1234, "message": "Test error"}

    def test_exception_with_details(self):
        """Details travel under data."""
        exc = FuzzerError("Test error", details={"width": 8})
        assert exc.to_dict()["data"] == {"width": 8}
        assert exc.code == FuzzerError.INTERNAL_ERROR

    def test_exception_string_representation(self):
        """String form carries the code."""
        assert str(FuzzerError("boom", code=7)) == "[7] boom"

    def test_subclasses_share_base(self):
        """Every specific error is a FuzzerError with its own code."""
        errors = [
            ValidationError("v"),
            ConfigurationError("c"),
            SeedError("s", width=8),
            CorpusLookupError("l", seed_id=3),
            MergeError("m"),
        ]
        assert all(isinstance(e, FuzzerError) for e in errors)
        assert len({e.code for e in errors}) == len(errors)


class TestValidationError:
    """Test ValidationError."""

    def test_validation_error_with_field(self):
        """Field and value land in details."""
        exc = ValidationError("bad", field="capacity", value=0)
        assert exc.details == {"field": "capacity", "value": "0"}
        assert exc.code == FuzzerError.VALIDATION_ERROR

    def test_validation_error_fields(self):
        """Whole-document validation lists every failing field."""
        exc = ValidationError("bad", fields=["mode.p_gen", "corpus.capacity"])
        assert exc.details["fields"] == ["mode.p_gen", "corpus.capacity"]

    def test_validation_error_chain(self):
        """The original exception is kept."""
        cause = ValueError("inner")
        assert ValidationError("outer", cause=cause).cause is cause


class TestConfigurationError:
    """Test ConfigurationError."""

    def test_configuration_error_basic(self):
        """No key, no details."""
        exc = ConfigurationError("missing")
        assert exc.code == FuzzerError.CONFIGURATION_ERROR
        assert exc.details == {}

    def test_configuration_error_with_key(self):
        """The offending key is reported."""
        exc = ConfigurationError("bad override", config_key="RVLOOPFUZZ_MASTER_SEED")
        assert exc.details["config_key"] == "RVLOOPFUZZ_MASTER_SEED"


class TestMergeError:
    """Test MergeError."""

    def test_hashes_reported(self):
        """Conflicting config hashes are listed."""
        exc = MergeError("different configs", hashes=["a", "b"])
        assert exc.to_dict()["data"] == {"config_hashes": ["a", "b"]}


class TestValidateAlignment:
    """Test validate_alignment."""

    def test_aligned(self):
        """Aligned addresses pass through."""
        assert validate_alignment(0x1000_0040, 64) == 0x1000_0040

    def test_misaligned(self):
        """Misaligned addresses name the field and show hex."""
        with pytest.raises(ValidationError) as exc:
            validate_alignment(0x1000_0042, 4, field="base_address")
        assert exc.value.details == {"field": "base_address", "value": "0x10000042"}

    @pytest.mark.parametrize("alignment", [0, 3, -4])
    def test_alignment_must_be_power_of_two(self, alignment):
        """The alignment itself is checked."""
        with pytest.raises(ValidationError):
            validate_alignment(0, alignment)


class TestValidatePositive:
    """Test validate_positive."""

    def test_positive(self):
        """Positive counts pass through."""
        assert validate_positive(5) == 5

    def test_zero(self):
        """Zero is rejected unless allowed."""
        with pytest.raises(ValidationError):
            validate_positive(0, field="capacity")
        assert validate_positive(0, allow_zero=True) == 0

    def test_negative(self):
        """Negative counts are rejected even when zero is allowed."""
        with pytest.raises(ValidationError):
            validate_positive(-1, allow_zero=True)
