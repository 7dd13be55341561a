"""Reference single-precision arithmetic on integer (sign, significand, exponent) triples."""

from math import isqrt
from typing import NamedTuple, Tuple

NV, DZ, OF, UF, NX = 0x10, 0x08, 0x04, 0x02, 0x01
RNE, RTZ, RDN, RUP, RMM = 0, 1, 2, 3, 4

QNAN = 0x7FC00000
INF = 0x7F800000
BIGGEST = 0x7F7FFFFF
SIGN_BIT = 1 << 31


class Unpacked(NamedTuple):
    sign: int
    exp_field: int
    frac: int

    @property
    def nan(self) -> bool:
        return self.exp_field == 0xFF and self.frac != 0

    @property
    def snan(self) -> bool:
        return self.nan and not self.frac >> 22

    @property
    def inf(self) -> bool:
        return self.exp_field == 0xFF and self.frac == 0

    @property
    def zero(self) -> bool:
        return self.exp_field == 0 and self.frac == 0

    @property
    def subnormal(self) -> bool:
        return self.exp_field == 0 and self.frac != 0

    def significand(self) -> Tuple[int, int]:
        """(sig, exp) with value ``sig * 2**exp``."""
        if self.exp_field == 0:
            return self.frac, -149
        return self.frac | (1 << 23), self.exp_field - 150


def unpack(bits: int) -> Unpacked:
    bits &= 0xFFFFFFFF
    return Unpacked(bits >> 31, (bits >> 23) & 0xFF, bits & 0x7FFFFF)


def _increment(rm: int, sign: int, lsb: int, round_bit: int, sticky: bool) -> int:
    if rm == RNE:
        return 1 if round_bit and (sticky or lsb) else 0
    if rm == RMM:
        return round_bit
    if rm == RDN:
        return 1 if sign and (round_bit or sticky) else 0
    if rm == RUP:
        return 1 if not sign and (round_bit or sticky) else 0
    return 0


def round_pack(sign: int, sig: int, exp: int, sticky: bool, rm: int) -> Tuple[int, int]:
    """Round ``sig * 2**exp`` (plus a sticky fraction below it) and pack it."""
    top = exp + sig.bit_length() - 1
    tiny = top < -126
    lsb_exp = -149 if tiny else top - 23
    shift = lsb_exp - exp
    if shift > 0:
        mant = sig >> shift
        round_bit = (sig >> (shift - 1)) & 1
        sticky = sticky or bool(sig & ((1 << (shift - 1)) - 1))
    else:
        mant = sig << -shift
        round_bit = 0
    inexact = bool(round_bit) or sticky
    mant += _increment(rm, sign, mant & 1, round_bit, sticky)
    if mant >> 24:
        mant >>= 1
        lsb_exp += 1

    flags = (NX if inexact else 0) | (UF if tiny and inexact else 0)
    if mant >> 23:
        biased = lsb_exp + 150
        if biased >= 0xFF:
            overflow_to_inf = rm in (RNE, RMM) or (rm == RDN and sign) or (rm == RUP and not sign)
            return (sign << 31) | (INF if overflow_to_inf else BIGGEST), OF | NX
    else:
        biased = 0
    return (sign << 31) | (biased << 23) | (mant & 0x7FFFFF), flags


def _propagate_nan(*operands: Unpacked) -> Tuple[int, int]:
    return QNAN, NV if any(op.snan for op in operands) else 0


def _zero_sum_sign(sign_x: int, sign_y: int, rm: int) -> int:
    if sign_x == sign_y:
        return sign_x
    return 1 if rm == RDN else 0


def _signed(sign: int, sig: int) -> int:
    return -sig if sign else sig


def _sum(x_sign: int, x_sig: int, x_exp: int, y_sign: int, y_sig: int, y_exp: int, rm: int) -> Tuple[int, int]:
    """Exact sum of two signed significands, rounded. Operands are finite."""
    exp = min(x_exp, y_exp)
    total = _signed(x_sign, x_sig << (x_exp - exp)) + _signed(y_sign, y_sig << (y_exp - exp))
    if total == 0:
        if x_sig == 0 and y_sig == 0:
            return _zero_sum_sign(x_sign, y_sign, rm) << 31, 0
        return (1 << 31 if rm == RDN else 0), 0
    return round_pack(1 if total < 0 else 0, abs(total), exp, False, rm)


def add(a: int, b: int, rm: int, subtract: bool = False) -> Tuple[int, int]:
    x, y = unpack(a), unpack(b)
    if x.nan or y.nan:
        return _propagate_nan(x, y)
    y_sign = y.sign ^ (1 if subtract else 0)
    if x.inf or y.inf:
        if x.inf and y.inf and x.sign != y_sign:
            return QNAN, NV
        return ((x.sign if x.inf else y_sign) << 31) | INF, 0
    xs, xe = x.significand()
    ys, ye = y.significand()
    return _sum(x.sign, xs, xe, y_sign, ys, ye, rm)


def mul(a: int, b: int, rm: int) -> Tuple[int, int]:
    x, y = unpack(a), unpack(b)
    if x.nan or y.nan:
        return _propagate_nan(x, y)
    sign = x.sign ^ y.sign
    if x.inf or y.inf:
        if x.zero or y.zero:
            return QNAN, NV
        return (sign << 31) | INF, 0
    if x.zero or y.zero:
        return sign << 31, 0
    xs, xe = x.significand()
    ys, ye = y.significand()
    return round_pack(sign, xs * ys, xe + ye, False, rm)


def div(a: int, b: int, rm: int) -> Tuple[int, int]:
    x, y = unpack(a), unpack(b)
    if x.nan or y.nan:
        return _propagate_nan(x, y)
    sign = x.sign ^ y.sign
    if x.inf and y.inf:
        return QNAN, NV
    if x.inf:
        return (sign << 31) | INF, 0
    if y.inf:
        return sign << 31, 0
    if y.zero:
        if x.zero:
            return QNAN, NV
        return (sign << 31) | INF, DZ
    if x.zero:
        return sign << 31, 0
    xs, xe = x.significand()
    ys, ye = y.significand()
    # At least 28 quotient bits so the round bit is exact and the remainder is sticky.
    shift = max(0, 28 + ys.bit_length() - xs.bit_length())
    quotient, remainder = divmod(xs << shift, ys)
    return round_pack(sign, quotient, xe - ye - shift, remainder != 0, rm)


def sqrt(a: int, rm: int) -> Tuple[int, int]:
    x = unpack(a)
    if x.nan:
        return _propagate_nan(x)
    if x.zero:
        return a & 0xFFFFFFFF, 0
    if x.sign:
        return QNAN, NV
    if x.inf:
        return INF, 0
    sig, exp = x.significand()
    if exp & 1:
        sig, exp = sig << 1, exp - 1
    sig, exp = sig << 64, exp - 64
    root = isqrt(sig)
    return round_pack(0, root, exp // 2, root * root != sig, rm)


def fused(a: int, b: int, c: int, rm: int, negate_product: bool, negate_addend: bool) -> Tuple[int, int]:
    x, y, z = unpack(a), unpack(b), unpack(c)
    if (x.inf and y.zero) or (x.zero and y.inf):
        return QNAN, NV
    if x.nan or y.nan or z.nan:
        return _propagate_nan(x, y, z)
    p_sign = x.sign ^ y.sign ^ int(negate_product)
    z_sign = z.sign ^ int(negate_addend)
    if x.inf or y.inf:
        if z.inf and z_sign != p_sign:
            return QNAN, NV
        return (p_sign << 31) | INF, 0
    if z.inf:
        return (z_sign << 31) | INF, 0
    xs, xe = x.significand()
    ys, ye = y.significand()
    zs, ze = z.significand()
    return _sum(p_sign, xs * ys, xe + ye, z_sign, zs, ze, rm)


def _order_key(x: Unpacked) -> int:
    magnitude = (x.exp_field << 23) | x.frac
    return -magnitude if x.sign else magnitude


def min_max(a: int, b: int, maximum: bool) -> Tuple[int, int]:
    x, y = unpack(a), unpack(b)
    flags = NV if x.snan or y.snan else 0
    if x.nan and y.nan:
        return QNAN, flags
    if x.nan:
        return b & 0xFFFFFFFF, flags
    if y.nan:
        return a & 0xFFFFFFFF, flags
    kx, ky = _order_key(x), _order_key(y)
    if kx == ky:
        # +0 and -0: the sign decides.
        pick_x = (x.sign <= y.sign) if maximum else (x.sign >= y.sign)
    else:
        pick_x = kx > ky if maximum else kx < ky
    return (a if pick_x else b) & 0xFFFFFFFF, flags


def compare(a: int, b: int, relation: str) -> Tuple[int, int]:
    x, y = unpack(a), unpack(b)
    if x.nan or y.nan:
        signalling = relation != "eq" or x.snan or y.snan
        return 0, NV if signalling else 0
    kx, ky = _order_key(x), _order_key(y)
    if relation == "eq":
        return int(kx == ky), 0
    if relation == "lt":
        return int(kx < ky), 0
    return int(kx <= ky), 0


def classify(a: int) -> int:
    x = unpack(a)
    if x.nan:
        return 0x100 if x.snan else 0x200
    if x.inf:
        return 0x001 if x.sign else 0x080
    if x.zero:
        return 0x008 if x.sign else 0x010
    if x.subnormal:
        return 0x004 if x.sign else 0x020
    return 0x002 if x.sign else 0x040


def to_int32(a: int, rm: int) -> Tuple[int, int]:
    """Saturating float32 to int32 conversion; returns the 32-bit result and flags."""
    x = unpack(a)
    if x.nan:
        return 0x7FFFFFFF, NV
    if x.inf:
        return (0x80000000 if x.sign else 0x7FFFFFFF), NV
    sig, exp = x.significand()
    if exp >= 0:
        magnitude, round_bit, sticky = sig << exp, 0, False
    else:
        shift = -exp
        magnitude = sig >> shift
        round_bit = (sig >> (shift - 1)) & 1
        sticky = bool(sig & ((1 << (shift - 1)) - 1))
    magnitude += _increment(rm, x.sign, magnitude & 1, round_bit, sticky)
    limit = (1 << 31) if x.sign else (1 << 31) - 1
    if magnitude > limit:
        return (0x80000000 if x.sign else 0x7FFFFFFF), NV
    value = -magnitude if x.sign else magnitude
    return value & 0xFFFFFFFF, NX if round_bit or sticky else 0


def from_int32(value: int, rm: int) -> Tuple[int, int]:
    value &= 0xFFFFFFFF
    sign = value >> 31
    magnitude = ((~value + 1) & 0xFFFFFFFF) if sign else value
    if magnitude == 0:
        return 0, 0
    return round_pack(sign, magnitude, 0, False, rm)
