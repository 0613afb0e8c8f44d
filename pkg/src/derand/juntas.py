"""Optimizers for sums of juntas driven by partial-expectation oracles (PEOs).

A PEO answers exact conditional expectations of an objective function when
some input bits are fixed and the rest are fair coins.  The master optimizer
partitions the variables so every support meets each part in few positions,
then walks the parts, extracting conditioned truth tables through the oracle
and maximizing each part by Fourier decomposition plus the character-sum
conditional-expectation routine.  Graded and biased-coin variants reduce to
the plain case level by level.

Multi-valued variables take values in M_b = {0..2^b-1} read as b bits, most
significant first; bit (i, j) is the j-th most significant bit of variable i.

JSON system files use 0-based variable indices:
  {"n": int, "b": int, "funcs": [{"vars": [...], "kind": "table"|"robp",
                                  "payload": ...}]}
A table payload is {"values": [...]} with (2^b)^w entries indexed mixed-radix,
first listed variable least significant.  A robp payload is {"start": id,
"nodes": [{"id", "var", "lo", "hi}], "sinks": {id: value}} whose "var" fields
index the function's local bits (position t*b + j for variable slot t, level j).
Rational values are written as integers or "p/q" strings.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from derand.codes import Code, CodesConfig, NeighborhoodFamily, build_unbiased_code
from derand.fourier import CharacterSum, FourierConfig, maximize_character_sum, wht
from derand.gf2 import BitVec, DimensionError, irreducible_poly, mul_ints

__all__ = [
    "PartialAssignment",
    "OracleKind",
    "TableOracle",
    "ROBP",
    "ROBPOracle",
    "Junta",
    "JuntaSystem",
    "SmallBiasSpace",
    "VariablePartition",
    "OptimizerConfig",
    "PartitionInfeasible",
    "OracleError",
    "optimize_truthtables",
    "optimize_juntas",
    "optimize_graded",
    "optimize_biased",
    "build_small_bias_space",
    "partition_variables",
    "robp_expectation",
    "evaluate_system",
    "system_expectation",
    "load_junta_system",
    "save_junta_system",
    "parse_rational",
    "rational_text",
]

Bit = int | None


class OracleError(ValueError):
    """A PEO was queried outside its contract or returned inconsistent data."""


class PartitionInfeasible(RuntimeError):
    """The budgeted rounds could not certify the intersection cap."""

    def __init__(self, final_q: int, message: str):
        super().__init__(message)
        self.final_q = final_q


class OracleKind(str, enum.Enum):
    PLAIN_PEO = "plain-peo"
    GRADED_PEO = "graded-peo"
    FULLY_GRADED_PEO = "fully-graded-peo"
    CONTINUOUS_PEO = "continuous-peo"
    TRUTH_TABLE = "truth-table"
    ROBP = "robp"


@dataclass(frozen=True)
class PartialAssignment:
    """n variables of b bit-levels each; entry (i, j) is 0, 1, or unknown (None).

    Level 0 is the most significant bit.  The assignment is graded when, for
    some level l, every bit above l is known and every bit below l is unknown;
    fully graded additionally requires level l itself to be uniform.
    """

    n: int
    b: int
    entries: tuple[Bit, ...]

    def __post_init__(self):
        if len(self.entries) != self.n * self.b:
            raise DimensionError("entry count differs from n*b")
        if any(e not in (0, 1, None) for e in self.entries):
            raise ValueError("entries must be 0, 1, or None")

    @classmethod
    def all_unknown(cls, n: int, b: int) -> "PartialAssignment":
        return cls(n, b, (None,) * (n * b))

    def get(self, i: int, j: int) -> Bit:
        return self.entries[i * self.b + j]

    def _level_states(self) -> list[str]:
        out = []
        for j in range(self.b):
            col = self.entries[j :: self.b] if self.b == 1 else tuple(
                self.entries[i * self.b + j] for i in range(self.n)
            )
            if all(e is not None for e in col):
                out.append("known")
            elif all(e is None for e in col):
                out.append("unknown")
            else:
                out.append("mixed")
        return out

    def is_graded(self) -> bool:
        states = self._level_states()
        lo = 0
        while lo < self.b and states[lo] == "known":
            lo += 1
        return all(s == "unknown" for s in states[lo + 1 :])

    def is_fully_graded(self) -> bool:
        states = self._level_states()
        lo = 0
        while lo < self.b and states[lo] == "known":
            lo += 1
        return all(s == "unknown" for s in states[lo:])

    def restrict(self, support: Sequence[int]) -> tuple[Bit, ...]:
        """Local bit view over the listed variables, b bits per variable."""
        return tuple(
            self.entries[i * self.b + j] for i in support for j in range(self.b)
        )


def parse_rational(v) -> Fraction:
    if isinstance(v, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return Fraction(int(v[0]), int(v[1]))
    raise ValueError(f"cannot parse rational from {v!r}")


def rational_text(x: Fraction) -> str | int:
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# --- oracles ------------------------------------------------------------------


class FuncOracle:
    """Base partial-expectation oracle over a function's local bits.

    Local bit t*b + j is level j of the function's t-th support variable.
    """

    oracle_kind: OracleKind = OracleKind.PLAIN_PEO

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        raise NotImplementedError

    def evaluate(self, values: Sequence[int]) -> Fraction:
        raise NotImplementedError

    def expectation_q(self, q: Sequence[Fraction]) -> Fraction:
        """Expectation under independent Bernoulli bits (continuous PEOs only)."""
        raise OracleError(f"{type(self).__name__} is not a continuous PEO")

    def table_over(self, local: Sequence[Bit], free: Sequence[int]) -> list[Fraction]:
        """Expectations for all settings of the listed local bit positions.

        Entry index bit t corresponds to free[t]; other entries follow
        ``local`` (None averages as a fair coin).
        """
        base = list(local)
        out = []
        for idx in range(1 << len(free)):
            for t, pos in enumerate(free):
                base[pos] = (idx >> t) & 1
            out.append(self.expectation(base))
        return out


class TableOracle(FuncOracle):
    """Explicit truth table over w variables of b bit-levels each.

    values has (2^b)^w entries; the index is mixed-radix with the first
    support variable least significant.
    """

    oracle_kind = OracleKind.TRUTH_TABLE

    def __init__(self, b: int, values: Sequence):
        self.b = b
        self.values = tuple(parse_rational(v) for v in values)
        size = len(self.values)
        per = 1 << b
        w = 0
        while per**w < size:
            w += 1
        if per**w != size:
            raise DimensionError(f"table size {size} is not a power of 2^b")
        self.w = w
        # index contribution of local bit t*b + j
        self._bit_weight = [
            (1 << (b - 1 - j)) * per**t for t in range(w) for j in range(b)
        ]

    def evaluate(self, values: Sequence[int]) -> Fraction:
        if len(values) != self.w:
            raise DimensionError("value count differs from arity")
        idx = 0
        for t, v in enumerate(values):
            if not 0 <= v < (1 << self.b):
                raise ValueError(f"value {v} outside M_{self.b}")
            idx += v * (1 << self.b) ** t
        return self.values[idx]

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        if len(local) != self.w * self.b:
            raise DimensionError("local view length differs from w*b")
        base = 0
        unknown = []
        for pos, e in enumerate(local):
            if e is None:
                unknown.append(self._bit_weight[pos])
            elif e:
                base += self._bit_weight[pos]
        total = Fraction(0)
        for mask in range(1 << len(unknown)):
            idx = base
            for t, wgt in enumerate(unknown):
                if (mask >> t) & 1:
                    idx += wgt
            total += self.values[idx]
        return total / (1 << len(unknown))

    def expectation_q(self, q: Sequence[Fraction]) -> Fraction:
        if self.b != 1:
            raise OracleError("continuous queries require b = 1 tables")
        if len(q) != self.w:
            raise DimensionError("probability vector length differs from arity")
        total = Fraction(0)
        for idx, val in enumerate(self.values):
            if val == 0:
                continue
            p = Fraction(1)
            for t in range(self.w):
                p *= q[t] if (idx >> t) & 1 else 1 - q[t]
            total += val * p
        return total


@dataclass(frozen=True)
class ROBP:
    """Read-once branching program: a DAG reading each variable at most once
    per path, with real-valued sinks."""

    start: str
    nodes: dict[str, tuple[int, str, str]]  # id -> (var, lo target, hi target)
    sinks: dict[str, Fraction]

    def validate(self):
        if self.start not in self.nodes and self.start not in self.sinks:
            raise OracleError(f"start {self.start!r} is not a node or sink")
        for nid, (var, lo, hi) in self.nodes.items():
            if nid in self.sinks:
                raise OracleError(f"{nid!r} is both a node and a sink")
            for ref in (lo, hi):
                if ref not in self.nodes and ref not in self.sinks:
                    raise OracleError(f"node {nid!r} references unknown {ref!r}")
            if var < 0:
                raise OracleError("negative variable index")
        order = self.topological_order()
        # read-once: a node's variable may not be readable from its successors
        readable: dict[str, frozenset[int]] = {nid: frozenset() for nid in self.sinks}
        for nid in reversed(order):
            if nid in self.sinks:
                continue
            var, lo, hi = self.nodes[nid]
            below = readable[lo] | readable[hi]
            if var in below:
                raise OracleError(f"variable {var} is read twice on a path via {nid!r}")
            readable[nid] = below | {var}

    def topological_order(self) -> list[str]:
        """Reachable ids from start, parents before children; cycles rejected."""
        order: list[str] = []
        state: dict[str, int] = {}
        stack = [(self.start, False)]
        while stack:
            nid, done = stack.pop()
            if done:
                order.append(nid)
                state[nid] = 2
                continue
            if state.get(nid) == 1:
                raise OracleError("cycle detected in branching program")
            if state.get(nid) == 2:
                continue
            state[nid] = 1
            stack.append((nid, True))
            if nid in self.nodes:
                _, lo, hi = self.nodes[nid]
                for ref in (hi, lo):
                    if state.get(ref) != 2:
                        if state.get(ref) == 1:
                            raise OracleError("cycle detected in branching program")
                        stack.append((ref, False))
        order.reverse()
        return order


def robp_expectation(
    robp: ROBP, q: Sequence[Fraction]
) -> tuple[dict[str, Fraction], Fraction]:
    """Per-sink reach probabilities and the expected sink value when variable
    i is an independent Bernoulli-q[i] bit.  Single forward pass in
    topological order."""
    robp.validate()
    order = robp.topological_order()
    mass: dict[str, Fraction] = {nid: Fraction(0) for nid in order}
    mass[robp.start] = Fraction(1)
    sink_mass: dict[str, Fraction] = {}
    for nid in order:
        m = mass[nid]
        if nid in robp.sinks:
            sink_mass[nid] = sink_mass.get(nid, Fraction(0)) + m
            continue
        if m == 0:
            continue
        var, lo, hi = robp.nodes[nid]
        if var >= len(q):
            raise OracleError(f"no probability for variable {var}")
        mass[hi] += m * q[var]
        mass[lo] += m * (1 - q[var])
    expectation = sum(
        (robp.sinks[sid] * p for sid, p in sink_mass.items()), Fraction(0)
    )
    return sink_mass, expectation


class ROBPOracle(FuncOracle):
    """Continuous PEO for a junta computed by a read-once branching program
    over the function's local bits."""

    oracle_kind = OracleKind.ROBP

    def __init__(self, b: int, robp: ROBP, w: int):
        self.b = b
        self.robp = robp
        self.w = w
        robp.validate()

    def _q_from_local(self, local: Sequence[Bit]) -> list[Fraction]:
        if len(local) != self.w * self.b:
            raise DimensionError("local view length differs from w*b")
        half = Fraction(1, 2)
        return [half if e is None else Fraction(e) for e in local]

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        return robp_expectation(self.robp, self._q_from_local(local))[1]

    def expectation_q(self, q: Sequence[Fraction]) -> Fraction:
        if self.b != 1:
            raise OracleError("continuous queries require b = 1")
        return robp_expectation(self.robp, list(q))[1]

    def evaluate(self, values: Sequence[int]) -> Fraction:
        bits = []
        for v in values:
            bits.extend((v >> (self.b - 1 - j)) & 1 for j in range(self.b))
        return self.expectation(bits)


class _LevelOracle(FuncOracle):
    """b = 1 view of one bit-level of a graded oracle, higher levels fixed."""

    def __init__(self, inner: FuncOracle, b: int, level: int, fixed: Sequence[tuple[int, ...]]):
        self.inner = inner
        self.b = b
        self.level = level
        self.fixed = fixed  # per support slot: bits of levels < level

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        full: list[Bit] = []
        for t, highs in enumerate(self.fixed):
            full.extend(highs)
            full.append(local[t])
            full.extend([None] * (self.b - self.level - 1))
        return self.inner.expectation(full)


class _BiasedOracle(FuncOracle):
    """Graded M_b oracle for f([y_1 < a_1], ...) backed by a continuous PEO."""

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, inner: FuncOracle, thresholds: Sequence[int], b: int):
        self.inner = inner
        self.thresholds = tuple(thresholds)
        self.b = b

    def _bernoulli(self, bits: Sequence[Bit], a: int) -> Fraction:
        """P(y < a) for y with the given known high bits, low bits fair coins."""
        val = 0
        known = 0
        for j in range(self.b):
            e = bits[j]
            if e is None:
                if any(x is not None for x in bits[j + 1 :]):
                    raise OracleError("non-graded per-variable bit pattern")
                break
            val = (val << 1) | e
            known += 1
        rem = self.b - known
        lo = val << rem
        favorable = min(max(a - lo, 0), 1 << rem)
        return Fraction(favorable, 1 << rem)

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        q = [
            self._bernoulli(local[t * self.b : (t + 1) * self.b], a)
            for t, a in enumerate(self.thresholds)
        ]
        return self.inner.expectation_q(q)


# --- systems -------------------------------------------------------------------


@dataclass(frozen=True)
class Junta:
    support: tuple[int, ...]
    oracle: FuncOracle
    weight: Fraction = Fraction(1)

    def __post_init__(self):
        if list(self.support) != sorted(set(self.support)):
            raise DimensionError("support must be sorted and duplicate-free")


@dataclass(frozen=True)
class JuntaSystem:
    """m objective functions, each a junta with an attached oracle handle."""

    n: int
    b: int
    funcs: tuple[Junta, ...]

    def __post_init__(self):
        for f in self.funcs:
            if f.support and f.support[-1] >= self.n:
                raise DimensionError("support outside variable range")

    @property
    def m(self) -> int:
        return len(self.funcs)

    def width(self) -> int:
        return max((len(f.support) for f in self.funcs), default=0)


def evaluate_system(sys_: JuntaSystem, x: Sequence[int]) -> Fraction:
    """Direct weighted evaluation at a full assignment (values in M_b)."""
    if len(x) != sys_.n:
        raise DimensionError("assignment length differs from n")
    total = Fraction(0)
    for f in sys_.funcs:
        total += f.weight * f.oracle.evaluate([x[i] for i in f.support])
    return total


def system_expectation(
    sys_: JuntaSystem, pattern: PartialAssignment | None = None
) -> Fraction:
    """Exact conditional expectation of the weighted sum via the oracles."""
    if pattern is None:
        pattern = PartialAssignment.all_unknown(sys_.n, sys_.b)
    total = Fraction(0)
    for f in sys_.funcs:
        total += f.weight * f.oracle.expectation(pattern.restrict(f.support))
    return total


# --- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    t_cap: int | None = None          # partition cap; None derives ceil(log2(max(4, m*n)))
    chunk_bits: int | None = None
    codes: CodesConfig = field(default_factory=CodesConfig)
    space_budget_log2: int = 16       # support cap for small-bias spaces
    space_escalations: int = 2
    partition_round_slack: int = 2
    part_code_cache_sets: int = 4096

    def fourier(self) -> FourierConfig:
        return FourierConfig(chunk_bits=self.chunk_bits, codes=self.codes)


def _default_t_cap(m: int, n: int) -> int:
    return max(1, math.ceil(math.log2(max(4, m * n))))


# --- truth-table optimizer -------------------------------------------------------


def optimize_truthtables(
    sys_: JuntaSystem,
    config: OptimizerConfig | None = None,
    code: Code | None = None,
) -> BitVec:
    """A point whose weighted sum is at least its mean over uniform bits.

    Each function must carry an explicit truth table; tables are transformed
    by the Walsh-Hadamard routine, coefficients aggregated by global subset,
    and the character-sum optimizer does the rest.
    """
    cfg = config or OptimizerConfig()
    if sys_.b != 1:
        raise OracleError("truth-table optimization works on single-bit variables")
    terms: list[tuple[tuple[int, ...], Fraction]] = []
    for f in sys_.funcs:
        if not isinstance(f.oracle, TableOracle) or f.oracle.b != 1:
            raise OracleError("every function needs an explicit single-bit table")
        if f.oracle.w != len(f.support):
            raise DimensionError("table arity differs from support size")
        spectrum = wht(f.oracle.values)
        for mask, coeff in enumerate(spectrum.coefficients):
            if coeff:
                e = tuple(f.support[t] for t in range(f.oracle.w) if (mask >> t) & 1)
                terms.append((e, f.weight * coeff))
    if not terms:
        return BitVec.zeros(sys_.n)
    cs = CharacterSum.make(sys_.n, terms)
    return maximize_character_sum(cs, cfg.fourier(), code=code)


# --- small-bias spaces ------------------------------------------------------------


@dataclass
class SmallBiasSpace:
    """Enumerable t-wise approximately independent distribution over {0,1}^n.

    Powering construction: a sample is indexed by a pair (a, c) over GF(2^s);
    bit i is the inner product of a^(i+1) and c.  epsilon is the certified
    multiplicative slack (0 for the full-space fallback).
    """

    n: int
    t: int
    epsilon: Fraction
    s: int | None                     # None marks the full-space fallback
    support_size: int

    def __post_init__(self):
        self._pow_cache: dict[int, list[int]] = {}
        self._col_cache: dict[int, np.ndarray] = {}
        if self.s is not None:
            self._b_arr = np.arange(1 << self.s, dtype=np.uint64)
            self._parity = (
                np.bitwise_count(np.arange(1 << self.s, dtype=np.uint64)) & 1
            ).astype(np.uint8)

    @property
    def is_full_space(self) -> bool:
        return self.s is None

    def _power(self, a: int, e: int) -> int:
        """a^(e+1) in GF(2^s) with an incrementally grown cache."""
        cache = self._pow_cache.setdefault(a, [a])
        poly = irreducible_poly(self.s)
        while len(cache) <= e:
            cache.append(mul_ints(cache[-1], a, self.s, poly))
        return cache[e]

    def bit_column(self, pos: int) -> np.ndarray:
        """Bit pos of every sample, support order (uint8 array)."""
        if pos in self._col_cache:
            return self._col_cache[pos]
        if self.is_full_space:
            col = ((np.arange(self.support_size, dtype=np.uint64) >> np.uint64(pos)) & 1).astype(np.uint8)
        else:
            blocks = [
                self._parity[np.bitwise_and(np.uint64(self._power(a, pos)), self._b_arr)]
                for a in range(1 << self.s)
            ]
            col = np.concatenate(blocks)
        self._col_cache[pos] = col
        return col

    def sample_bit(self, index: int, pos: int) -> int:
        if self.is_full_space:
            return (index >> pos) & 1
        a, c = divmod(index, 1 << self.s)
        return (self._power(a, pos) & c).bit_count() & 1

    def sample_ints(self) -> list[int]:
        out = [0] * self.support_size
        for pos in range(self.n):
            col = self.bit_column(pos)
            for idx in np.nonzero(col)[0]:
                out[int(idx)] |= 1 << pos
        return out

    def sample_vectors(self) -> list[BitVec]:
        return [BitVec(v, self.n) for v in self.sample_ints()]


def build_small_bias_space(
    n: int, t: int, epsilon, budget_log2: int = 16, force_powering: bool = False
) -> SmallBiasSpace:
    """A t-wise, epsilon-approximately independent space over {0,1}^n.

    The field exponent s is chosen so the powering construction's bias n/2^s
    stays at most epsilon*2^-t; when the budget clamps s, the honestly
    achieved epsilon is reported instead.  Small n falls back to the exact
    full space unless force_powering is set.
    """
    if not 1 <= t <= n:
        raise ValueError("need 1 <= t <= n")
    eps = Fraction(epsilon) if not isinstance(epsilon, Fraction) else epsilon
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    need = Fraction(n * (1 << t)) / eps
    s_req = max(1, math.ceil(math.log2(need)))
    s = max(1, min(s_req, budget_log2 // 2, 30))
    if n <= 2 * s and not force_powering:
        return SmallBiasSpace(n=n, t=t, epsilon=Fraction(0), s=None, support_size=1 << n)
    s = min(s, s_req)
    achieved = min(eps, Fraction(((1 << t) - 1) * n, 1 << s))
    return SmallBiasSpace(n=n, t=t, epsilon=achieved, s=s, support_size=1 << (2 * s))


# --- derandomized variable partitioning --------------------------------------------


@dataclass(frozen=True)
class VariablePartition:
    """Parts covering [0, n) with every declared set meeting each part in at
    most t_cap positions."""

    n: int
    parts: tuple[tuple[int, ...], ...]
    t_cap: int
    rounds: int
    q_history: tuple[int, ...]

    def verify(self, family: NeighborhoodFamily) -> bool:
        seen = sorted(i for p in self.parts for i in p)
        if seen != list(range(self.n)):
            return False
        for part in self.parts:
            pset = set(part)
            for f in family.sets:
                if sum(1 for i in f if i in pset) > self.t_cap:
                    return False
        return True


def _partition_q(sets: Sequence[tuple[int, ...]], part_of: Sequence[int], t_cap: int) -> int:
    q = 0
    for f in sets:
        counts: dict[int, int] = {}
        for i in f:
            counts[part_of[i]] = counts.get(part_of[i], 0) + 1
        for h in counts.values():
            if h >= t_cap:
                q += math.comb(h, t_cap)
    return q


def _score_candidates(
    space: SmallBiasSpace,
    groups: list[tuple[tuple[int, ...], int]],
    t_cap: int,
) -> tuple[int, int]:
    """Q value after splitting each group by a sample's bits, minimized over
    the sample space; returns (best index, best Q)."""
    total_bound = sum(math.comb(h, t_cap) for _, h in groups)
    if total_bound < (1 << 62):
        q_vec = np.zeros(space.support_size, dtype=np.int64)
        for positions, h in groups:
            cnt = np.zeros(space.support_size, dtype=np.int64)
            for pos in positions:
                cnt += space.bit_column(pos)
            lut = np.array(
                [math.comb(c, t_cap) + math.comb(h - c, t_cap) for c in range(h + 1)],
                dtype=np.int64,
            )
            q_vec += lut[cnt]
        best = int(np.argmin(q_vec))
        return best, int(q_vec[best])
    # exact big-int fallback
    best_idx, best_q = 0, None
    cols = {pos: space.bit_column(pos) for positions, _ in groups for pos in positions}
    for idx in range(space.support_size):
        q = 0
        for positions, h in groups:
            c = sum(int(cols[pos][idx]) for pos in positions)
            q += math.comb(c, t_cap) + math.comb(h - c, t_cap)
        if best_q is None or q < best_q:
            best_idx, best_q = idx, q
    return best_idx, best_q


def partition_variables(
    family: NeighborhoodFamily, t_cap: int, config: OptimizerConfig | None = None
) -> VariablePartition:
    """Split [0, n) so every listed set meets each part in at most t_cap spots.

    Runs rounds of binary splitting; each round picks the sample of a small-bias
    space minimizing the potential Q = sum over (set, part) of C(H, t_cap).
    Rounds are accepted only when Q strictly decreases; a stall escalates the
    space and ultimately raises PartitionInfeasible with the final Q.
    """
    if t_cap < 1:
        raise ValueError("t_cap must be >= 1")
    cfg = config or OptimizerConfig()
    n = family.n
    if family.width <= t_cap or n == 0:
        q0 = sum(math.comb(len(f), t_cap) for f in family.sets)
        return VariablePartition(n, (tuple(range(n)),), t_cap, 0, (q0,))

    sets = family.distinct_nonempty()
    part_of = [0] * n
    q0 = sum(math.comb(len(f), t_cap) for f in sets)
    q_history = [q0]
    r_plan = max(1, math.ceil(math.log2(q0 + 1) / max(1, t_cap - 1)))
    budget = r_plan + cfg.partition_round_slack
    space = build_small_bias_space(
        n, t_cap, Fraction(1, r_plan), cfg.space_budget_log2
    )
    escalations = cfg.space_escalations
    rounds = 0
    while True:
        groups = []
        for f in sets:
            counts: dict[int, list[int]] = {}
            for i in f:
                counts.setdefault(part_of[i], []).append(i)
            for positions in counts.values():
                if len(positions) >= t_cap:
                    groups.append((tuple(positions), len(positions)))
        if not any(h > t_cap for _, h in groups):
            break
        if rounds >= budget:
            raise PartitionInfeasible(
                q_history[-1], f"round budget {budget} exhausted with Q={q_history[-1]}"
            )
        idx, q_new = _score_candidates(space, groups, t_cap)
        if q_new >= q_history[-1]:
            if escalations > 0 and not space.is_full_space:
                escalations -= 1
                space = build_small_bias_space(
                    n, t_cap, Fraction(1, r_plan),
                    budget_log2=2 * (space.s + 2),
                )
                continue
            raise PartitionInfeasible(
                q_history[-1], f"potential stalled at Q={q_history[-1]}"
            )
        for i in range(n):
            part_of[i] = part_of[i] * 2 + space.sample_bit(idx, i)
        q_check = _partition_q(sets, part_of, t_cap)
        if q_check != q_new:
            raise RuntimeError("vectorized Q disagrees with the exact recount")
        q_history.append(q_new)
        rounds += 1

    order: dict[int, list[int]] = {}
    for i in range(n):
        order.setdefault(part_of[i], []).append(i)
    parts = tuple(tuple(order[k]) for k in sorted(order))
    result = VariablePartition(n, parts, t_cap, rounds, tuple(q_history))
    if not result.verify(family):
        raise RuntimeError("partition failed its own invariant")
    return result


# --- the master optimizers ----------------------------------------------------------


@dataclass
class _PartPlan:
    partition: VariablePartition
    codes: dict[int, Code | None]


def _plan_parts(
    n: int, supports: Sequence[tuple[int, ...]], cfg: OptimizerConfig, t_cap: int | None
) -> _PartPlan:
    family = NeighborhoodFamily.make(n, supports)
    cap = t_cap if t_cap is not None else _default_t_cap(max(1, len(supports)), max(1, n))
    while True:
        try:
            partition = partition_variables(family, cap, cfg)
            break
        except PartitionInfeasible:
            if cap >= family.width:
                raise
            cap = min(family.width, cap * 2)
    return _PartPlan(partition, {})


def _part_code(
    plan: _PartPlan,
    part_index: int,
    local_vars: list[int],
    local_supports: list[tuple[int, ...]],
    cfg: OptimizerConfig,
) -> Code | None:
    """Unbiased code over the part's local variables covering every subset of
    every local support, cached across bit-levels; None when too large."""
    if part_index in plan.codes:
        return plan.codes[part_index]
    subsets: set[tuple[int, ...]] = set()
    ok = True
    for sup in local_supports:
        if len(subsets) + (1 << len(sup)) > cfg.part_code_cache_sets:
            ok = False
            break
        for mask in range(1, 1 << len(sup)):
            subsets.add(tuple(sup[t] for t in range(len(sup)) if (mask >> t) & 1))
    code = None
    if ok and subsets:
        fam = NeighborhoodFamily.make(len(local_vars), sorted(subsets))
        code = build_unbiased_code(fam, cfg.codes)
    plan.codes[part_index] = code
    return code


def _optimize_level(
    n: int, funcs: Sequence[Junta], plan: _PartPlan, cfg: OptimizerConfig
) -> BitVec:
    """One conditional-expectations sweep over the parts (all variables b = 1)."""
    bits: list[Bit] = [None] * n
    for part_index, part in enumerate(plan.partition.parts):
        pset = set(part)
        touched = [f for f in funcs if any(i in pset for i in f.support)]
        if not touched:
            for i in part:
                bits[i] = 0
            continue
        local_vars = sorted({i for f in touched for i in f.support if i in pset})
        var_slot = {i: t for t, i in enumerate(local_vars)}
        sub_funcs = []
        local_supports = []
        for f in touched:
            free = [t for t, i in enumerate(f.support) if i in pset]
            base = [bits[i] for i in f.support]
            for t in free:
                base[t] = None
            table = f.oracle.table_over(base, free)
            sub_support = tuple(var_slot[f.support[t]] for t in free)
            local_supports.append(sub_support)
            sub_funcs.append(Junta(sub_support, TableOracle(1, table), f.weight))
        code = _part_code(plan, part_index, local_vars, local_supports, cfg)
        subsys = JuntaSystem(len(local_vars), 1, tuple(sub_funcs))
        z = optimize_truthtables(subsys, cfg, code=code)
        for t, i in enumerate(local_vars):
            bits[i] = z.bit(t)
        for i in part:
            if bits[i] is None:
                bits[i] = 0
    return BitVec.from_bits([b if b is not None else 0 for b in bits])


def optimize_juntas(
    sys_: JuntaSystem, config: OptimizerConfig | None = None
) -> BitVec:
    """A point with weighted sum at least the uniform expectation, for b = 1
    systems with plain PEOs.

    Partitions the variables, then per part extracts the conditioned truth
    tables by PEO queries and maximizes with the truth-table optimizer.  The
    partition cap escalates automatically when the budgeted rounds fail.
    """
    cfg = config or OptimizerConfig()
    if sys_.b != 1:
        raise OracleError("optimize_juntas expects b = 1 (use optimize_graded)")
    if not sys_.funcs:
        return BitVec.zeros(sys_.n)
    plan = _plan_parts(sys_.n, [f.support for f in sys_.funcs], cfg, cfg.t_cap)
    return _optimize_level(sys_.n, sys_.funcs, plan, cfg)


def optimize_graded(
    sys_: JuntaSystem, config: OptimizerConfig | None = None
) -> list[int]:
    """A point of M_b^n with weighted sum at least the uniform expectation.

    Bit-levels are fixed most significant first; each level is a b = 1 system
    whose PEO queries stay graded, solved by the plain optimizer.  The
    partition and per-part codes are shared across levels.
    """
    cfg = config or OptimizerConfig()
    n, b = sys_.n, sys_.b
    if not sys_.funcs:
        return [0] * n
    plan = _plan_parts(n, [f.support for f in sys_.funcs], cfg, cfg.t_cap)
    fixed: list[list[int]] = [[] for _ in range(n)]
    for level in range(b):
        level_funcs = tuple(
            Junta(
                f.support,
                _LevelOracle(f.oracle, b, level, [tuple(fixed[i]) for i in f.support]),
                f.weight,
            )
            for f in sys_.funcs
        )
        z = _optimize_level(n, level_funcs, plan, cfg)
        for i in range(n):
            fixed[i].append(z.bit(i))
    return [sum(bit << (b - 1 - j) for j, bit in enumerate(fixed[i])) for i in range(n)]


def optimize_biased(
    sys_: JuntaSystem,
    p: Sequence[Fraction],
    b: int,
    config: OptimizerConfig | None = None,
) -> BitVec:
    """A point with weighted sum at least the expectation under independent
    Bernoulli-p_i bits, each p_i a dyadic rational with denominator 2^b.

    Reduces through thresholds [y_i < p_i * 2^b] over M_b; the continuous
    PEOs of the functions supply the graded PEO of the reduction.
    """
    cfg = config or OptimizerConfig()
    if sys_.b != 1:
        raise OracleError("optimize_biased expects a b = 1 system")
    if len(p) != sys_.n:
        raise DimensionError("probability vector length differs from n")
    thresholds = []
    for pi in p:
        pi = Fraction(pi)
        if not 0 <= pi <= 1:
            raise ValueError(f"probability {pi} outside [0, 1]")
        scaled = pi * (1 << b)
        if scaled.denominator != 1:
            raise ValueError(f"probability {pi} is not dyadic with denominator 2^{b}")
        thresholds.append(int(scaled))
    graded_funcs = tuple(
        Junta(
            f.support,
            _BiasedOracle(f.oracle, [thresholds[i] for i in f.support], b),
            f.weight,
        )
        for f in sys_.funcs
    )
    y = optimize_graded(JuntaSystem(sys_.n, b, graded_funcs), cfg)
    return BitVec.from_bits([1 if y[i] < thresholds[i] else 0 for i in range(sys_.n)])


# --- JSON system files -----------------------------------------------------------


def _func_from_json(obj: dict, b: int) -> Junta:
    support = tuple(sorted(int(v) for v in obj["vars"]))
    if len(set(support)) != len(support):
        raise ValueError("duplicate variables in a function's support")
    kind = obj.get("kind", "table")
    payload = obj["payload"]
    if kind == "table":
        oracle: FuncOracle = TableOracle(b, payload["values"])
        if oracle.w != len(support):
            raise ValueError("table arity differs from the vars list")
    elif kind == "robp":
        nodes = {
            str(nd["id"]): (int(nd["var"]), str(nd["lo"]), str(nd["hi"]))
            for nd in payload["nodes"]
        }
        sinks = {str(k): parse_rational(v) for k, v in payload["sinks"].items()}
        robp = ROBP(str(payload["start"]), nodes, sinks)
        oracle = ROBPOracle(b, robp, len(support))
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    weight = parse_rational(obj.get("weight", 1))
    return Junta(support, oracle, weight)


def load_junta_system(path: str) -> JuntaSystem:
    with open(path) as fh:
        obj = json.load(fh)
    n, b = int(obj["n"]), int(obj.get("b", 1))
    funcs = tuple(_func_from_json(fo, b) for fo in obj["funcs"])
    return JuntaSystem(n, b, funcs)


def save_junta_system(sys_: JuntaSystem, path: str):
    funcs = []
    for f in sys_.funcs:
        if isinstance(f.oracle, TableOracle):
            payload = {"values": [rational_text(v) for v in f.oracle.values]}
            kind = "table"
        elif isinstance(f.oracle, ROBPOracle):
            payload = {
                "start": f.oracle.robp.start,
                "nodes": [
                    {"id": nid, "var": var, "lo": lo, "hi": hi}
                    for nid, (var, lo, hi) in sorted(f.oracle.robp.nodes.items())
                ],
                "sinks": {k: rational_text(v) for k, v in sorted(f.oracle.robp.sinks.items())},
            }
            kind = "robp"
        else:
            raise ValueError(f"cannot serialize oracle {type(f.oracle).__name__}")
        entry = {"vars": list(f.support), "kind": kind, "payload": payload}
        if f.weight != 1:
            entry["weight"] = rational_text(f.weight)
        funcs.append(entry)
    with open(path, "w") as fh:
        json.dump({"n": sys_.n, "b": sys_.b, "funcs": funcs}, fh, indent=1)
        fh.write("\n")
