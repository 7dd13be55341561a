"""Standard exception hierarchy for the fuzzer."""

from typing import Optional, Dict, Any, List
import structlog

logger = structlog.get_logger(__name__)


class FuzzerError(Exception):
    """Base exception for all fuzzer errors, carrying a stable numeric code."""

    INTERNAL_ERROR = 1000

    VALIDATION_ERROR = 1001
    CONFIGURATION_ERROR = 1002
    ENCODING_RANGE_ERROR = 1101
    ARITY_ERROR = 1102
    SEED_ERROR = 1201
    DOMAIN_ERROR = 1202
    CORPUS_LOOKUP_ERROR = 1301
    CONTRACT_ERROR = 1401
    BOUND_ERROR = 1402
    CATALOG_ERROR = 1501
    SYNTHESIS_ERROR = 1601
    MERGE_ERROR = 1701

    def __init__(
        self,
        message: str,
        code: int = INTERNAL_ERROR,
        details: Optional[Dict[str, Any]] = None,
        cause: Optional[Exception] = None,
    ):
        """Initialize FuzzerError.

        Args:
            message: Human-readable error message
            code: Numeric error code
            details: Additional error details
            cause: Original exception that caused this
        """
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}
        self.cause = cause

        logger.error(
            "fuzzer_exception",
            message=message,
            code=code,
            details=self.details,
            cause=str(cause) if cause else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to a plain error object."""
        error_obj: Dict[str, Any] = {
            "code": self.code,
            "message": self.message,
        }

        if self.details:
            error_obj["data"] = self.details

        return error_obj

    def __str__(self) -> str:
        """String representation."""
        return f"[{self.code}] {self.message}"


class ValidationError(FuzzerError):
    """Raised when input validation fails."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Optional[Any] = None,
        fields: Optional[List[str]] = None,
        cause: Optional[Exception] = None,
    ):
        """Initialize ValidationError.

        Args:
            message: Error message
            field: Field name that failed validation
            value: Invalid value
            fields: Every failing field, when a whole document was validated
            cause: Original exception
        """
        details: Dict[str, Any] = {}
        if field:
            details["field"] = field
        if value is not None:
            details["value"] = str(value)
        if fields:
            details["fields"] = list(fields)

        super().__init__(
            message,
            code=self.VALIDATION_ERROR,
            details=details,
            cause=cause,
        )


class ConfigurationError(FuzzerError):
    """Raised when configuration is invalid."""

    def __init__(
        self,
        message: str,
        config_key: Optional[str] = None,
        cause: Optional[Exception] = None,
    ):
        """Initialize ConfigurationError.

        Args:
            message: Error message
            config_key: Configuration key that's missing/invalid
            cause: Original exception
        """
        details = {}
        if config_key:
            details["config_key"] = config_key

        super().__init__(
            message,
            code=self.CONFIGURATION_ERROR,
            details=details,
            cause=cause,
        )


class EncodingRangeError(FuzzerError):
    """Raised when an operand does not fit its bit field."""

    def __init__(self, message: str, slot: str, value: int, bits: Optional[int] = None):
        details: Dict[str, Any] = {"slot": slot, "value": value}
        if bits is not None:
            details["bits"] = bits
        super().__init__(message, code=self.ENCODING_RANGE_ERROR, details=details)


class ArityError(FuzzerError):
    """Raised when a template is encoded with missing or unknown operands."""

    def __init__(self, message: str, mnemonic: str, missing: Optional[List[str]] = None):
        details: Dict[str, Any] = {"mnemonic": mnemonic}
        if missing:
            details["missing"] = missing
        super().__init__(message, code=self.ARITY_ERROR, details=details)


class SeedError(FuzzerError):
    """Raised when an LFSR is seeded with its absorbing zero state."""

    def __init__(self, message: str, width: Optional[int] = None):
        details = {"width": width} if width is not None else {}
        super().__init__(message, code=self.SEED_ERROR, details=details)


class DomainError(FuzzerError):
    """Raised when a numeric argument lies outside a function's domain."""

    def __init__(self, message: str, **values: Any):
        super().__init__(message, code=self.DOMAIN_ERROR, details=dict(values))


class CorpusLookupError(FuzzerError):
    """Raised when a seed id is not resident in the corpus."""

    def __init__(self, message: str, seed_id: int):
        super().__init__(message, code=self.CORPUS_LOOKUP_ERROR, details={"seed_id": seed_id})


class ContractError(FuzzerError):
    """Raised when a caller violates an operation's precondition."""

    def __init__(self, message: str, **values: Any):
        super().__init__(message, code=self.CONTRACT_ERROR, details=dict(values))


class BoundError(FuzzerError):
    """Raised when an exhaustive enumeration would exceed its size bound."""

    def __init__(self, message: str, state_bits: int, limit_bits: int):
        super().__init__(
            message,
            code=self.BOUND_ERROR,
            details={"state_bits": state_bits, "limit_bits": limit_bits},
        )


class CatalogError(FuzzerError):
    """Raised when a bug id is not registered in the bug catalog."""

    def __init__(self, message: str, bug_id: str):
        super().__init__(message, code=self.CATALOG_ERROR, details={"bug_id": bug_id})


class SynthesisError(FuzzerError):
    """Raised when an architectural state cannot be materialized by a prologue."""

    def __init__(self, message: str, field: str):
        super().__init__(message, code=self.SYNTHESIS_ERROR, details={"field": field})


class MergeError(FuzzerError):
    """Raised when artifacts from incompatible campaigns are merged."""

    def __init__(self, message: str, hashes: Optional[List[str]] = None):
        details = {"config_hashes": hashes} if hashes else {}
        super().__init__(message, code=self.MERGE_ERROR, details=details)
