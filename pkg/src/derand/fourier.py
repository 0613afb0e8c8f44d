"""Walsh-Hadamard analysis over GF(2) and the conditional-expectation optimizer
for weighted sums of Fourier characters.

The optimizer builds an unbiased code for the weighted sets, then fixes seed
bits in chunks so the conditional expectation of the sum never decreases; the
final value is at least the empty-set weight, which equals the expectation of
the sum over uniform inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from derand.codes import Code, CodesConfig, NeighborhoodFamily, build_unbiased_code, code_xor, expand_seed
from derand.gf2 import BitVec, DimensionError

__all__ = [
    "SpectrumTable",
    "CharacterSum",
    "FourierConfig",
    "wht",
    "inverse_wht",
    "evaluate_character_sum",
    "maximize_character_sum",
    "heavy_codeword",
]


@dataclass(frozen=True)
class FourierConfig:
    chunk_bits: int | None = None   # conditional-expectation chunk size; None = derived
    codes: CodesConfig = CodesConfig()


@dataclass(frozen=True)
class SpectrumTable:
    """2^w character coefficients indexed by subset bitmask (bit t = variable t)."""

    arity: int
    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coefficients) != 1 << self.arity:
            raise DimensionError("coefficient count is not 2^arity")


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def wht(truth_table: Sequence) -> SpectrumTable:
    """Normalized Walsh-Hadamard spectrum of a table of 2^w exact rationals.

    coefficient[f] = 2^-w * sum_y chi_f(y) * g(y); the inverse transform
    reproduces the table exactly in Fraction arithmetic.
    """
    size = len(truth_table)
    if size == 0 or size & (size - 1):
        raise DimensionError(f"table length {size} is not a power of two")
    w = size.bit_length() - 1
    vals = [_as_fraction(v) for v in truth_table]
    h = 1
    while h < size:
        for base in range(0, size, h * 2):
            for t in range(base, base + h):
                a, b = vals[t], vals[t + h]
                vals[t], vals[t + h] = a + b, a - b
        h *= 2
    scale = Fraction(1, size)
    return SpectrumTable(w, tuple(v * scale for v in vals))


def inverse_wht(spectrum: SpectrumTable) -> list[Fraction]:
    """Exact inverse: g(y) = sum_f coefficient[f] * chi_f(y)."""
    vals = list(spectrum.coefficients)
    size = len(vals)
    h = 1
    while h < size:
        for base in range(0, size, h * 2):
            for t in range(base, base + h):
                a, b = vals[t], vals[t + h]
                vals[t], vals[t + h] = a + b, a - b
        h *= 2
    return vals


@dataclass(frozen=True)
class CharacterSum:
    """A weighted sum of Fourier characters; repeated sets are summed on ingest."""

    family: NeighborhoodFamily
    weights: tuple[Fraction, ...]          # parallel to family.sets
    constant: Fraction                     # weight of the empty set

    @classmethod
    def make(cls, n: int, terms: Iterable[tuple[Iterable[int], object]]) -> "CharacterSum":
        agg: dict[tuple[int, ...], Fraction] = {}
        for e, weight in terms:
            key = tuple(sorted(set(e)))
            agg[key] = agg.get(key, Fraction(0)) + _as_fraction(weight)
        constant = agg.pop((), Fraction(0))
        sets = sorted(agg)
        return cls(
            NeighborhoodFamily.make(n, sets),
            tuple(agg[e] for e in sets),
            constant,
        )

    @property
    def n(self) -> int:
        return self.family.n


def evaluate_character_sum(cs: CharacterSum, x: BitVec) -> Fraction:
    """Direct evaluation of the weighted character sum at a point."""
    if x.length != cs.n:
        raise DimensionError("point length differs from variable count")
    total = cs.constant
    for e, weight in zip(cs.family.sets, cs.weights):
        parity = 0
        for i in e:
            parity ^= x.bit(i)
        total += -weight if parity else weight
    return total


def _chunk_bits(m: int, n: int, L: int, cfg: FourierConfig) -> int:
    if cfg.chunk_bits is not None:
        return max(1, min(cfg.chunk_bits, L)) if L else 1
    mn = max(4, m * n)
    t = math.ceil(math.log2(mn) / math.log2(math.log2(mn)))
    return max(1, min(t, 16, L if L else 1))


def maximize_character_sum(
    cs: CharacterSum, config: FourierConfig | None = None, code: Code | None = None
) -> BitVec:
    """A point whose weighted character sum is at least the empty-set weight.

    Seed bits of an unbiased code for the weighted sets are fixed a chunk at a
    time; a term's conditional expectation is zero while any of its undetermined
    seed positions is set in the term's code XOR, and exact once determined.
    Ties between chunk values go to the smallest value.
    """
    cfg = config or FourierConfig()
    live = [(e, w) for e, w in zip(cs.family.sets, cs.weights) if w]
    if not live:
        return BitVec.zeros(cs.n)
    if code is None:
        code = build_unbiased_code(
            NeighborhoodFamily.make(cs.n, [e for e, _ in live]), cfg.codes
        )
    L = code.length

    # integer weights over one power-of-two denominator keep comparisons exact and fast
    denom = 1
    for _, w in live:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    terms = [(code_xor(code, e).value, int(w * denom)) for e, w in live]
    for mask, _ in terms:
        if mask == 0:
            raise DimensionError("code is biased for a weighted set")

    t = _chunk_bits(len(live), cs.n, L, cfg)
    y = 0
    fixed = 0
    settled = 0  # exact contribution of terms fully determined by y[:fixed]
    pending = terms
    while fixed < L:
        width = min(t, L - fixed)
        horizon = fixed + width
        newly = [tm for tm in pending if tm[0] >> horizon == 0]
        pending = [tm for tm in pending if tm[0] >> horizon != 0]
        best_val, best_c = None, 0
        for c in range(1 << width):
            trial = y | (c << fixed)
            val = 0
            for mask, weight in newly:
                val += -weight if (mask & trial).bit_count() & 1 else weight
            if best_val is None or val > best_val:
                best_val, best_c = val, c
        y |= best_c << fixed
        for mask, weight in newly:
            settled += -weight if (mask & y).bit_count() & 1 else weight
        fixed = horizon
    assert not pending and settled >= 0, "conditional expectation fell below the mean"
    return expand_seed(code, BitVec(y, L))


def heavy_codeword(
    rows: Sequence[BitVec], config: FourierConfig | None = None
) -> BitVec:
    """A point x with row . x = 1 for at least half of the nonzero rows.

    All-zero rows can never be satisfied and are excluded from the guarantee.
    Realized by maximizing the negated sum of the rows' characters.
    """
    if not rows:
        raise DimensionError("generator has no rows")
    n = rows[0].length
    for r in rows:
        if r.length != n:
            raise DimensionError("generator rows have mixed lengths")
    terms = [
        (tuple(i for i in range(n) if r.bit(i)), Fraction(-1))
        for r in rows
        if not r.is_zero()
    ]
    if not terms:
        return BitVec.zeros(n)
    cs = CharacterSum.make(n, terms)
    return maximize_character_sum(cs, config)


def heavy_codeword_weight(rows: Sequence[BitVec], x: BitVec) -> int:
    """Number of nonzero rows with row . x = 1 (direct evaluation)."""
    return sum(1 for r in rows if not r.is_zero() and r.dot(x) == 1)
