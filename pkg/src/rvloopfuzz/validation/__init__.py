"""Validation utilities and the fuzzer exception hierarchy."""

from .validators import (
    validate_alignment,
    validate_positive,
)
from .exceptions import (
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

__all__ = [
    # Validators
    "validate_alignment",
    "validate_positive",
    # Exceptions
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
