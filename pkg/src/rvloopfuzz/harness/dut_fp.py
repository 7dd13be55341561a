"""Single-precision arithmetic of the DUT: exact rationals rounded onto float32.

Operands are classified through numpy float32 views of their bit patterns; finite
results are computed exactly as `Fraction` values and rounded once.
"""

from fractions import Fraction
from math import isqrt
from typing import Tuple

import numpy as np

from ..isa.csrs import (
    FLAG_DZ,
    FLAG_NV,
    FLAG_NX,
    FLAG_OF,
    FLAG_UF,
    RM_RDN,
    RM_RMM,
    RM_RNE,
    RM_RTZ,
    RM_RUP,
)

CANONICAL_NAN = 0x7FC00000
SIGN = 0x80000000
POS_INF = 0x7F800000
MAX_FINITE = 0x7F7FFFFF

FpResult = Tuple[int, int]

_HALF = Fraction(1, 2)
_MIN_NORMAL = Fraction(1, 1 << 126)
_SUBNORMAL_QUANTUM = Fraction(1, 1 << 149)
_OVERFLOW = Fraction(1 << 128)
_ROOT_SCALE = 32


def as_float32(bits: int) -> np.float32:
    return np.array([bits & 0xFFFFFFFF], dtype=np.uint32).view(np.float32)[0]


def float32_bits(value: float) -> int:
    return int(np.array([value], dtype=np.float32).view(np.uint32)[0])


def is_nan(bits: int) -> bool:
    return bool(np.isnan(as_float32(bits)))


def is_snan(bits: int) -> bool:
    return is_nan(bits) and not bits & 0x00400000


def is_inf(bits: int) -> bool:
    return bool(np.isinf(as_float32(bits)))


def is_zero(bits: int) -> bool:
    return bool(as_float32(bits) == 0)


def negative(bits: int) -> bool:
    return bool(np.signbit(as_float32(bits)))


def exact(bits: int) -> Fraction:
    """Exact value of a finite float32."""
    return Fraction(float(as_float32(bits)))


def _nan_result(*operands: int) -> FpResult:
    flags = FLAG_NV if any(is_snan(b) for b in operands) else 0
    return CANONICAL_NAN, flags


def _rounds_up(rm: int, sign: bool, whole: int, rest: Fraction) -> bool:
    if rest == 0 or rm == RM_RTZ:
        return False
    if rm == RM_RNE:
        return rest > _HALF or (rest == _HALF and whole % 2 == 1)
    if rm == RM_RMM:
        return rest >= _HALF
    if rm == RM_RDN:
        return sign
    return not sign  # RUP


def _overflowed(sign: bool, rm: int) -> FpResult:
    to_infinity = rm in (RM_RNE, RM_RMM) or (rm == RM_RDN and sign) or (rm == RM_RUP and not sign)
    magnitude = POS_INF if to_infinity else MAX_FINITE
    return (SIGN if sign else 0) | magnitude, FLAG_OF | FLAG_NX


def round_value(value: Fraction, rm: int) -> FpResult:
    """Round a nonzero exact value to float32 under ``rm``.

    Tininess is detected before rounding; UF is raised only for tiny inexact results.
    """
    sign = value < 0
    magnitude = -value if sign else value
    exp = magnitude.numerator.bit_length() - magnitude.denominator.bit_length()
    if Fraction(2) ** exp > magnitude:
        exp -= 1
    tiny = magnitude < _MIN_NORMAL
    quantum = _SUBNORMAL_QUANTUM if tiny else Fraction(2) ** (exp - 23)
    scaled = magnitude / quantum
    whole = scaled.numerator // scaled.denominator
    rest = scaled - whole
    if _rounds_up(rm, sign, whole, rest):
        whole += 1

    flags = 0
    if rest:
        flags |= FLAG_NX
        if tiny:
            flags |= FLAG_UF
    rounded = whole * quantum
    if rounded >= _OVERFLOW:
        return _overflowed(sign, rm)
    if whole == 0:
        return (SIGN if sign else 0), flags
    return float32_bits(float(-rounded if sign else rounded)), flags


def _exact_zero(sign_a: bool, sign_b: bool, rm: int) -> int:
    """Sign of an exactly zero sum of two terms with the given signs."""
    if sign_a == sign_b:
        return SIGN if sign_a else 0
    return SIGN if rm == RM_RDN else 0


def fadd(a: int, b: int, rm: int) -> FpResult:
    if is_nan(a) or is_nan(b):
        return _nan_result(a, b)
    if is_inf(a) and is_inf(b):
        if negative(a) != negative(b):
            return CANONICAL_NAN, FLAG_NV
        return a, 0
    if is_inf(a):
        return a, 0
    if is_inf(b):
        return b, 0
    total = exact(a) + exact(b)
    if total == 0:
        if is_zero(a) and is_zero(b):
            return _exact_zero(negative(a), negative(b), rm), 0
        return _exact_zero(False, True, rm), 0
    return round_value(total, rm)


def fsub(a: int, b: int, rm: int) -> FpResult:
    if is_nan(a) or is_nan(b):
        return _nan_result(a, b)
    return fadd(a, b ^ SIGN, rm)


def fmul(a: int, b: int, rm: int) -> FpResult:
    if is_nan(a) or is_nan(b):
        return _nan_result(a, b)
    sign = SIGN if negative(a) != negative(b) else 0
    if is_inf(a) or is_inf(b):
        if is_zero(a) or is_zero(b):
            return CANONICAL_NAN, FLAG_NV
        return sign | POS_INF, 0
    if is_zero(a) or is_zero(b):
        return sign, 0
    return round_value(exact(a) * exact(b), rm)


def fdiv(a: int, b: int, rm: int) -> FpResult:
    if is_nan(a) or is_nan(b):
        return _nan_result(a, b)
    sign = SIGN if negative(a) != negative(b) else 0
    if is_inf(a):
        if is_inf(b):
            return CANONICAL_NAN, FLAG_NV
        return sign | POS_INF, 0
    if is_inf(b):
        return sign, 0
    if is_zero(b):
        if is_zero(a):
            return CANONICAL_NAN, FLAG_NV
        return sign | POS_INF, FLAG_DZ
    if is_zero(a):
        return sign, 0
    return round_value(exact(a) / exact(b), rm)


def fsqrt(a: int, rm: int) -> FpResult:
    if is_nan(a):
        return _nan_result(a)
    if is_zero(a):
        return a, 0
    if negative(a):
        return CANONICAL_NAN, FLAG_NV
    if is_inf(a):
        return a, 0
    value = exact(a)
    # value = n / 2**k with k even; the root is isqrt(n * 4**s) / 2**(k/2 + s).
    n, k = value.numerator, value.denominator.bit_length() - 1
    if k % 2:
        n, k = n * 2, k + 1
    scaled = n << (2 * _ROOT_SCALE)
    root = isqrt(scaled)
    denominator_bits = k // 2 + _ROOT_SCALE
    if root * root == scaled:
        return round_value(Fraction(root, 1 << denominator_bits), rm)
    # Inexact: the midpoint of (root, root + 1) rounds like the true root.
    return round_value(Fraction(2 * root + 1, 1 << (denominator_bits + 1)), rm)


def fma(a: int, b: int, c: int, rm: int, negate_product: bool, negate_addend: bool) -> FpResult:
    """``(+-a*b) + (+-c)`` with a single rounding."""
    product_invalid = (is_inf(a) and is_zero(b)) or (is_zero(a) and is_inf(b))
    if product_invalid:
        return CANONICAL_NAN, FLAG_NV
    if is_nan(a) or is_nan(b) or is_nan(c):
        return _nan_result(a, b, c)
    product_sign = (negative(a) != negative(b)) != negate_product
    addend_sign = negative(c) != negate_addend
    if is_inf(a) or is_inf(b):
        if is_inf(c) and addend_sign != product_sign:
            return CANONICAL_NAN, FLAG_NV
        return (SIGN if product_sign else 0) | POS_INF, 0
    if is_inf(c):
        return (SIGN if addend_sign else 0) | POS_INF, 0
    product = exact(a) * exact(b)
    if negate_product:
        product = -product
    addend = -exact(c) if negate_addend else exact(c)
    total = product + addend
    if total == 0:
        if product == 0 and addend == 0:
            return _exact_zero(product_sign, addend_sign, rm), 0
        return _exact_zero(False, True, rm), 0
    return round_value(total, rm)


def fminmax(a: int, b: int, want_max: bool) -> FpResult:
    flags = FLAG_NV if is_snan(a) or is_snan(b) else 0
    if is_nan(a) and is_nan(b):
        return CANONICAL_NAN, flags
    if is_nan(a):
        return b, flags
    if is_nan(b):
        return a, flags
    fa, fb = as_float32(a), as_float32(b)
    if fa == fb:
        # Only zeros of opposite sign compare equal with different bits.
        if want_max:
            return (a if not negative(a) else b), flags
        return (a if negative(a) else b), flags
    if want_max:
        return (a if fa > fb else b), flags
    return (a if fa < fb else b), flags


def fcompare(a: int, b: int, op: str) -> FpResult:
    """``op`` is eq, lt or le; eq is quiet, lt and le signal on any NaN."""
    if is_nan(a) or is_nan(b):
        if op == "eq":
            return 0, FLAG_NV if is_snan(a) or is_snan(b) else 0
        return 0, FLAG_NV
    fa, fb = as_float32(a), as_float32(b)
    if op == "eq":
        return int(bool(fa == fb)), 0
    if op == "lt":
        return int(bool(fa < fb)), 0
    return int(bool(fa <= fb)), 0


def fclass(a: int) -> int:
    if is_nan(a):
        return 1 << 8 if is_snan(a) else 1 << 9
    neg = negative(a)
    if is_inf(a):
        return 1 << 0 if neg else 1 << 7
    if is_zero(a):
        return 1 << 3 if neg else 1 << 4
    subnormal = abs(exact(a)) < _MIN_NORMAL
    if subnormal:
        return 1 << 2 if neg else 1 << 5
    return 1 << 1 if neg else 1 << 6


def _round_to_integer(value: Fraction, rm: int) -> int:
    sign = value < 0
    magnitude = -value if sign else value
    whole = magnitude.numerator // magnitude.denominator
    if _rounds_up(rm, sign, whole, magnitude - whole):
        whole += 1
    return -whole if sign else whole


def fcvt_w_s(a: int, rm: int) -> FpResult:
    """float32 to int32, saturating; result sign-extended to 64 bits (unsigned form)."""
    int_max, int_min = (1 << 31) - 1, -(1 << 31)
    if is_nan(a):
        return int_max, FLAG_NV
    if is_inf(a):
        return (int_min if negative(a) else int_max) & 0xFFFFFFFFFFFFFFFF, FLAG_NV
    value = exact(a)
    result = _round_to_integer(value, rm)
    if result > int_max:
        return int_max, FLAG_NV
    if result < int_min:
        return int_min & 0xFFFFFFFFFFFFFFFF, FLAG_NV
    flags = FLAG_NX if result != value else 0
    return result & 0xFFFFFFFFFFFFFFFF, flags


def fcvt_s_w(value: int, rm: int) -> FpResult:
    """Signed 32-bit integer (low bits of ``value``) to float32."""
    value &= 0xFFFFFFFF
    if value >> 31:
        value -= 1 << 32
    if value == 0:
        return 0, 0
    return round_value(Fraction(value), rm)
