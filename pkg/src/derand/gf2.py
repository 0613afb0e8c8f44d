"""GF(2) primitives: bit-packed vectors, matrix rank, and GF(2^s) field arithmetic.

Everything here is an immutable value; all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "BitVec",
    "FieldElem",
    "MonomialIndex",
    "DimensionError",
    "FieldError",
    "rank_gf2",
    "field_add",
    "field_mul",
    "field_pow",
    "fast_mul",
    "fast_pow",
    "eval_monomial",
    "irreducible_poly",
]


class DimensionError(ValueError):
    """Raised when vector or matrix dimensions do not match."""


class FieldError(ValueError):
    """Raised on mixed-field arithmetic or an unsupported field exponent."""


@dataclass(frozen=True)
class BitVec:
    """An immutable vector over GF(2), packed into a Python int.

    Bit i of ``value`` is coordinate i; coordinates beyond ``length`` are zero.
    """

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise DimensionError("negative length")
        if self.value < 0 or self.value >> self.length:
            raise DimensionError("value has bits outside the declared length")

    @classmethod
    def zeros(cls, length: int) -> "BitVec":
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVec":
        value = 0
        n = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            value |= b << n
            n += 1
        return cls(value, n)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise DimensionError(f"index {i} out of range for length {self.length}")
        return (self.value >> i) & 1

    def bits(self) -> list[int]:
        return [(self.value >> i) & 1 for i in range(self.length)]

    def __xor__(self, other: "BitVec") -> "BitVec":
        if self.length != other.length:
            raise DimensionError(f"length mismatch: {self.length} vs {other.length}")
        return BitVec(self.value ^ other.value, self.length)

    def dot(self, other: "BitVec") -> int:
        """Inner product over GF(2)."""
        if self.length != other.length:
            raise DimensionError(f"length mismatch: {self.length} vs {other.length}")
        return (self.value & other.value).bit_count() & 1

    def weight(self) -> int:
        return self.value.bit_count()

    def is_zero(self) -> bool:
        return self.value == 0

    def concat(self, other: "BitVec") -> "BitVec":
        return BitVec(self.value | (other.value << self.length), self.length + other.length)

    def to_hex(self) -> str:
        """Lowercase hex, most-significant nibble first, zero-padded high."""
        nibbles = max(1, (self.length + 3) // 4)
        return format(self.value, f"0{nibbles}x")

    @classmethod
    def from_hex(cls, text: str, length: int) -> "BitVec":
        value = int(text, 16)
        if value >> length:
            raise DimensionError(f"hex value does not fit in {length} bits")
        return cls(value, length)

    def __str__(self):
        return f"BitVec({self.to_hex()}, len={self.length})"


def rank_gf2(rows: Sequence[BitVec]) -> int:
    """GF(2) rank of the span of ``rows`` by Gaussian elimination.

    All rows must share one length; an empty list has rank 0.
    """
    rows = list(rows)
    if not rows:
        return 0
    length = rows[0].length
    for r in rows:
        if r.length != length:
            raise DimensionError("rows have mixed lengths")
    return rank_gf2_ints(r.value for r in rows)


def rank_gf2_ints(rows: Iterable[int]) -> int:
    """Rank of int-packed GF(2) rows (no length checks, internal fast path)."""
    basis: dict[int, int] = {}
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in basis:
                row ^= basis[top]
            else:
                basis[top] = row
                break
    return len(basis)


# Fixed irreducible polynomial per field exponent s: the lexicographically
# smallest irreducible polynomial of degree s over GF(2) (constant encoding
# across runs and platforms; verified irreducible in the test suite).
_IRREDUCIBLE = {
    1: 0x3, 2: 0x7, 3: 0xb, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11b,
    9: 0x203, 10: 0x409, 11: 0x805, 12: 0x1009, 13: 0x201b, 14: 0x4021,
    15: 0x8003, 16: 0x1002b, 17: 0x20009, 18: 0x40009, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x100001b,
    25: 0x2000009, 26: 0x400001b, 27: 0x8000027, 28: 0x10000003,
    29: 0x20000005, 30: 0x40000003, 31: 0x80000009, 32: 0x10000008d,
    33: 0x20000004b, 34: 0x40000001b, 35: 0x800000005, 36: 0x1000000035,
    37: 0x200000003f, 38: 0x4000000063, 39: 0x8000000011, 40: 0x10000000039,
    41: 0x20000000009, 42: 0x40000000027, 43: 0x80000000059,
    44: 0x100000000021, 45: 0x20000000001b, 46: 0x400000000003,
    47: 0x800000000021, 48: 0x100000000002d, 49: 0x2000000000071,
    50: 0x400000000001d, 51: 0x800000000004b, 52: 0x10000000000009,
    53: 0x20000000000047, 54: 0x4000000000007d, 55: 0x80000000000047,
    56: 0x100000000000095, 57: 0x200000000000011, 58: 0x400000000000063,
    59: 0x80000000000007b, 60: 0x1000000000000003, 61: 0x2000000000000027,
    62: 0x4000000000000069, 63: 0x8000000000000003,
}


def irreducible_poly(s: int) -> int:
    """The module's fixed irreducible polynomial for GF(2^s), 1 <= s <= 63."""
    try:
        return _IRREDUCIBLE[s]
    except KeyError:
        raise FieldError(f"field exponent s={s} not supported (1..63)") from None


@dataclass(frozen=True)
class FieldElem:
    """An element of GF(2^s) in polynomial basis, encoded as an s-bit int."""

    value: int
    s: int

    def __post_init__(self):
        irreducible_poly(self.s)
        if self.value < 0 or self.value >> self.s:
            raise FieldError(f"value {self.value} outside GF(2^{self.s})")

    def __add__(self, other: "FieldElem") -> "FieldElem":
        return field_add(self, other)

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        return field_mul(self, other)

    def is_zero(self) -> bool:
        return self.value == 0


def _check_same_field(a: FieldElem, b: FieldElem):
    if a.s != b.s:
        raise FieldError(f"mixed fields GF(2^{a.s}) and GF(2^{b.s})")


def field_add(a: FieldElem, b: FieldElem) -> FieldElem:
    _check_same_field(a, b)
    return FieldElem(a.value ^ b.value, a.s)


def mul_ints(a: int, b: int, s: int, poly: int) -> int:
    """Carry-less multiply mod the degree-s irreducible polynomial (int fast path)."""
    r = 0
    top = 1 << s
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return r


def field_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    _check_same_field(a, b)
    return FieldElem(mul_ints(a.value, b.value, a.s, irreducible_poly(a.s)), a.s)


def pow_ints(a: int, e: int, s: int, poly: int) -> int:
    """a**e in GF(2^s) by square-and-multiply; a**0 == 1 (including a == 0)."""
    r = 1
    while e:
        if e & 1:
            r = mul_ints(r, a, s, poly)
        a = mul_ints(a, a, s, poly)
        e >>= 1
    return r


_LOG_TABLES: dict[int, tuple[list[int], list[int]]] = {}


def _build_log_tables(s: int) -> tuple[list[int], list[int]]:
    """exp/log tables for GF(2^s) built from a multiplicative generator."""
    poly = irreducible_poly(s)
    order = (1 << s) - 1

    def factors(n):
        out, d = set(), 2
        while d * d <= n:
            while n % d == 0:
                out.add(d)
                n //= d
            d += 1
        if n > 1:
            out.add(n)
        return out

    qs = factors(order)
    g = 2
    while True:
        if all(pow_ints(g, order // q, s, poly) != 1 for q in qs):
            break
        g += 1
    exp = [0] * (2 * order)
    log = [0] * (1 << s)
    v = 1
    for e in range(order):
        exp[e] = v
        exp[e + order] = v
        log[v] = e
        v = mul_ints(v, g, s, poly)
    return exp, log


def fast_mul(s: int):
    """A two-argument multiplier for GF(2^s); table-backed for s <= 16."""
    poly = irreducible_poly(s)
    if s > 16:
        return lambda a, b: mul_ints(a, b, s, poly)
    if s not in _LOG_TABLES:
        _LOG_TABLES[s] = _build_log_tables(s)
    exp, log = _LOG_TABLES[s]

    def mul(a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return exp[log[a] + log[b]]

    return mul


def fast_pow(s: int):
    """An (a, e) -> a**e power routine for GF(2^s); table-backed for s <= 16."""
    poly = irreducible_poly(s)
    if s > 16:
        return lambda a, e: pow_ints(a, e, s, poly)
    if s not in _LOG_TABLES:
        _LOG_TABLES[s] = _build_log_tables(s)
    exp, log = _LOG_TABLES[s]
    order = (1 << s) - 1

    def power(a: int, e: int) -> int:
        if e == 0:
            return 1
        if a == 0:
            return 0
        return exp[(log[a] * e) % order]

    return power


def field_pow(a: FieldElem, e: int) -> FieldElem:
    if e < 0:
        raise FieldError("negative exponent")
    return FieldElem(pow_ints(a.value, e, a.s, irreducible_poly(a.s)), a.s)


@dataclass(frozen=True)
class MonomialIndex:
    """A monomial z_1^{u_1} ... z_k^{u_k} with each exponent in 0..d.

    Indices map to exponent vectors by the mixed-radix rule with u_1 least
    significant, so index 0 is the constant monomial.
    """

    exponents: tuple[int, ...]
    k: int
    d: int

    def __post_init__(self):
        if len(self.exponents) != self.k:
            raise DimensionError("exponent vector length differs from k")
        if any(not 0 <= u <= self.d for u in self.exponents):
            raise ValueError("exponent outside 0..d")

    @classmethod
    def from_index(cls, index: int, k: int, d: int) -> "MonomialIndex":
        if not 0 <= index < (d + 1) ** k:
            raise ValueError(f"monomial index {index} out of range")
        exps = []
        for _ in range(k):
            exps.append(index % (d + 1))
            index //= d + 1
        return cls(tuple(exps), k, d)

    def to_index(self) -> int:
        index = 0
        for u in reversed(self.exponents):
            index = index * (self.d + 1) + u
        return index


def eval_monomial(mono: MonomialIndex, alpha: Sequence[FieldElem]) -> FieldElem:
    """Evaluate the monomial at a point of GF(2^s)^k; the empty product is 1."""
    if len(alpha) != mono.k:
        raise DimensionError(f"point has {len(alpha)} coordinates, expected {mono.k}")
    if mono.k == 0:
        raise DimensionError("monomial over zero variables has no field context")
    s = alpha[0].s
    poly = irreducible_poly(s)
    r = 1
    for a, u in zip(alpha, mono.exponents):
        if a.s != s:
            raise FieldError("mixed fields in evaluation point")
        if u:
            r = mul_ints(r, pow_ints(a.value, u, s, poly), s, poly)
    return FieldElem(r, s)
