"""Input validation utilities shared by the corpus and instruction blocks."""

from .exceptions import ValidationError


def validate_alignment(address: int, alignment: int, field: str = "address") -> int:
    """Validate that an address is a multiple of a power-of-two alignment.

    Raises:
        ValidationError: If alignment is not a power of two or address is misaligned
    """
    if alignment <= 0 or alignment & (alignment - 1):
        raise ValidationError(
            "Alignment must be a positive power of two",
            field="alignment",
            value=alignment,
        )
    if address % alignment:
        raise ValidationError(
            f"Address must be {alignment}-byte aligned",
            field=field,
            value=hex(address),
        )
    return address


def validate_positive(value: int, field: str = "value", allow_zero: bool = False) -> int:
    """Validate a positive (or non-negative) count.

    Raises:
        ValidationError: If value is not positive
    """
    minimum = 0 if allow_zero else 1
    if value < minimum:
        raise ValidationError(
            f"{field} must be >= {minimum}",
            field=field,
            value=value,
        )
    return value
