"""Codes over GF(2) whose induced probability spaces are unbiased for, or fool,
a family of index-set neighborhoods.

A code is a list A(0..n-1) of GF(2) vectors of common length L; the induced
space draws a uniform seed y in GF(2)^L and outputs X_i = A(i) . y.  The code
is unbiased for a set e when the XOR A(e) of its vectors is nonzero, and fools
e when that holds for every nonempty subset of e, which forces exact uniform
marginals on e over the 2^L seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from derand.gf2 import (
    BitVec,
    DimensionError,
    FieldElem,
    MonomialIndex,
    fast_mul,
    fast_pow,
    irreducible_poly,
    rank_gf2_ints,
)

__all__ = [
    "NeighborhoodFamily",
    "Code",
    "FoolingCertificate",
    "FoolingFailure",
    "CodesConfig",
    "BuildError",
    "BudgetError",
    "code_xor",
    "expand_seed",
    "unbiased_round",
    "build_unbiased_code",
    "build_unbiased_code_with_report",
    "potential_F",
    "build_fooling_code",
    "build_fooling_code_with_report",
    "verify_code",
    "save_family",
    "load_family",
    "save_code",
    "load_code",
]


class BuildError(RuntimeError):
    """A construction exceeded its length cap or an internal guarantee failed."""


class BudgetError(RuntimeError):
    """An enumeration budget (candidates or seeds) was exceeded."""


@dataclass(frozen=True)
class NeighborhoodFamily:
    """A list of index sets over [0, n); duplicates are permitted."""

    n: int
    sets: tuple[tuple[int, ...], ...]

    @classmethod
    def make(cls, n: int, sets: Iterable[Iterable[int]]) -> "NeighborhoodFamily":
        norm = []
        for e in sets:
            e = tuple(sorted(set(e)))
            for i in e:
                if not 0 <= i < n:
                    raise DimensionError(f"index {i} outside [0, {n})")
            norm.append(e)
        return cls(n, tuple(norm))

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def width(self) -> int:
        return max((len(e) for e in self.sets), default=0)

    def distinct_nonempty(self) -> list[tuple[int, ...]]:
        seen = []
        seen_set = set()
        for e in self.sets:
            if e and e not in seen_set:
                seen_set.add(e)
                seen.append(e)
        return seen


@dataclass(frozen=True)
class Code:
    """n GF(2) vectors of common length L; the induced space has 2^L seeds."""

    vectors: tuple[BitVec, ...]
    length: int

    @classmethod
    def make(cls, vectors: Sequence[BitVec]) -> "Code":
        vectors = tuple(vectors)
        if not vectors:
            return cls(vectors, 0)
        length = vectors[0].length
        for v in vectors:
            if v.length != length:
                raise DimensionError("code vectors have mixed lengths")
        return cls(vectors, length)

    @property
    def n(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class FoolingCertificate:
    """Result of a successful verification.

    checked_seed_count is 2^L when all seeds were exhaustively enumerated
    (fooling mode) and 0 when the check was algebraic (unbiased mode).
    """

    family: NeighborhoodFamily
    mode: str
    checked_seed_count: int


@dataclass(frozen=True)
class FoolingFailure:
    """First violation found: the set, and for fooling mode the pattern and counts."""

    mode: str
    set_index: int
    bad_set: tuple[int, ...]
    pattern: tuple[int, ...] | None = None
    count: int | None = None
    expected: Fraction | None = None


@dataclass(frozen=True)
class CodesConfig:
    max_candidate_log2: int = 12      # cap on s: candidate scoring enumerates 2^s field values
    seed_budget_log2: int = 24        # cap on L for exhaustive seed enumeration
    length_cap_factor: float = 4.0    # abort threshold: factor * (log2 m + width)
    length_cap: int | None = None     # explicit override


# --- basic operations -------------------------------------------------------

def code_xor(code: Code, e: Iterable[int]) -> BitVec:
    """XOR of the listed code vectors; the zero vector for an empty set."""
    acc = 0
    for i in e:
        if not 0 <= i < code.n:
            raise DimensionError(f"index {i} outside [0, {code.n})")
        acc ^= code.vectors[i].value
    return BitVec(acc, code.length)


def expand_seed(code: Code, y: BitVec) -> BitVec:
    """Map a seed to the induced sample: X_i = A(i) . y over GF(2)."""
    if y.length != code.length:
        raise DimensionError(f"seed length {y.length} != code length {code.length}")
    out = 0
    for i, v in enumerate(code.vectors):
        out |= ((v.value & y.value).bit_count() & 1) << i
    return BitVec(out, code.n)


# --- parameter schedules ----------------------------------------------------

def _clog(x: float) -> float:
    return math.log(max(16.0, x))


def _k_formula(v: float) -> int:
    return max(1, math.ceil(math.log(_clog(v))))


def _s_formula(v: float) -> int:
    return max(2, math.ceil(_clog(v) / math.log(_clog(_clog(v)))))


def _ceil_root(n: int, k: int) -> int:
    """Smallest t >= 1 with t**k >= n."""
    if n <= 1:
        return 1
    t = max(1, round(n ** (1.0 / k)))
    while t > 1 and (t - 1) ** k >= n:
        t -= 1
    while t ** k < n:
        t += 1
    return t


def _pick_s(k: int, d: int, log_target: float, s_formula: int, cfg: CodesConfig) -> int:
    """Choose the per-round field exponent minimizing the planned code length.

    The guaranteed per-round contraction of the dead count is k*d/2^s, so the
    planned round count is log(target)/log(2^s/(k*d)); we scan the feasible
    range and keep the shortest planned L = rounds*s (ties to smaller s).
    """
    kd = max(1, k * d)
    s_min = max(2, s_formula, (2 * kd).bit_length())  # 2^s >= 2*k*d
    s_cap = max(s_min, cfg.max_candidate_log2)
    best_s, best_len = s_min, None
    for s in range(s_min, s_cap + 1):
        denom = s * math.log(2) - math.log(kd)
        rounds = max(1, math.ceil(log_target / denom)) if log_target > 0 else 1
        planned = rounds * s
        if best_len is None or planned < best_len:
            best_s, best_len = s, planned
    return best_s


# --- monomial bookkeeping ---------------------------------------------------

class _MonomialSpace:
    """Exponent vectors and cached evaluation for variables 0..n-1."""

    def __init__(self, n: int, k: int, d: int, s: int):
        if (d + 1) ** k < n:
            raise BuildError(f"(d+1)^k = {(d + 1) ** k} < n = {n}")
        self.n, self.k, self.d, self.s = n, k, d, s
        self.poly = irreducible_poly(s)
        self.mul = fast_mul(s)
        self.pow = fast_pow(s)
        self.exps = [MonomialIndex.from_index(i, k, d).exponents for i in range(n)]

    def powers(self, alpha: int) -> list[int]:
        """alpha^0 .. alpha^d in GF(2^s)."""
        out = [1]
        mul = self.mul
        for _ in range(self.d):
            out.append(mul(out[-1], alpha))
        return out

    def eval_var(self, i: int, alphas: Sequence[int]) -> int:
        v = 1
        for a, u in zip(alphas, self.exps[i]):
            if u:
                v = self.mul(v, self.pow(a, u))
        return v


# --- one round of the unbiased construction (greedy over field candidates) --

def unbiased_round(
    family: NeighborhoodFamily, k: int, s: int, config: CodesConfig | None = None
) -> tuple[list[FieldElem], NeighborhoodFamily]:
    """Greedily pick alpha_1..alpha_k so that most sets keep a nonzero polynomial.

    Each set e induces the polynomial sum of the distinct monomials of its
    members; alpha_i is chosen by exhaustively scoring all 2^s candidates to
    maximize the surviving (nonzero) sets.  Returns the chosen point and the
    family of survivors; the dead sets evaluate to zero at the point.
    """
    cfg = config or CodesConfig()
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 2 <= s <= 62:
        raise ValueError("s must be in 2..62")
    if s > cfg.max_candidate_log2 and family.sets:
        raise BudgetError(f"2^{s} candidates exceed the configured budget 2^{cfg.max_candidate_log2}")
    n = family.n
    d = _ceil_root(max(n, 1), k) - 1
    space = _MonomialSpace(max(n, 1), k, d, s)

    # polynomial of each set: residual exponent tuple -> GF(2^s) coefficient
    polys: list[dict[tuple[int, ...], int]] = []
    for e in family.sets:
        poly: dict[tuple[int, ...], int] = {}
        for i in e:
            key = space.exps[i]
            poly[key] = poly.get(key, 0) ^ 1
        polys.append({key: c for key, c in poly.items() if c})
    initial_live = sum(1 for p in polys if p)

    alphas: list[int] = []
    for pos in range(k):
        live_idx = [t for t, p in enumerate(polys) if p]
        best_alpha, best_count, best_subst = 0, -1, None
        for alpha in range(1 << s):
            pows = space.powers(alpha)
            substituted = []
            count = 0
            for t in live_idx:
                new: dict[tuple[int, ...], int] = {}
                for key, c in polys[t].items():
                    nk = key[1:]
                    nc = new.get(nk, 0) ^ space.mul(c, pows[key[0]])
                    if nc:
                        new[nk] = nc
                    elif nk in new:
                        del new[nk]
                substituted.append(new)
                if new:
                    count += 1
            if count > best_count:
                best_alpha, best_count, best_subst = alpha, count, substituted
        # the greedy maximum is at least the average survival rate
        if family.sets and best_count * (1 << s) < len(live_idx) * ((1 << s) - d):
            raise BuildError("round survival fell below the guaranteed bound")
        alphas.append(best_alpha)
        for t, new in zip(live_idx, best_subst or []):
            polys[t] = new

    survivors = [family.sets[t] for t, p in enumerate(polys) if p]
    if len(survivors) * (1 << s) < initial_live * ((1 << s) - k * d):
        raise BuildError("round survivors fell below the guaranteed bound")
    return [FieldElem(a, s) for a in alphas], NeighborhoodFamily(n, tuple(survivors))


# --- E-unbiased code construction -------------------------------------------

@dataclass
class UnbiasedBuildReport:
    k: int = 0
    s: int = 0
    d: int = 0
    rounds: int = 0
    dead_counts: list[int] = field(default_factory=list)
    restricted: bool = False
    length: int = 0
    length_cap: int = 0


def _length_cap(m: int, width: int, cfg: CodesConfig) -> int:
    if cfg.length_cap is not None:
        return cfg.length_cap
    return max(8, math.ceil(cfg.length_cap_factor * (math.log2(max(2, m)) + width)))


def _build_unbiased_core(
    n: int, sets: list[tuple[int, ...]], cfg: CodesConfig, report: UnbiasedBuildReport
) -> list[int]:
    """Concatenate rounds until every set has a nonzero XOR; ints of length L bits."""
    m = len(sets)
    if m == 0 or n == 0:
        report.length = 0
        return [0] * n
    k = _k_formula(m)
    d = _ceil_root(n, k) - 1
    s = _pick_s(k, d, math.log(max(2, m)), _s_formula(m), cfg)
    cap = _length_cap(m, max(len(e) for e in sets), cfg)
    report.k, report.s, report.d, report.length_cap = k, d, s, cap

    dead = NeighborhoodFamily(n, tuple(sets))
    report.dead_counts = [dead.m]
    vec_ints = [0] * n
    space = _MonomialSpace(n, k, d, s)
    length = 0
    while dead.m:
        if length + s > cap:
            raise BuildError(
                f"unbiased code exceeded the length cap {cap} with {dead.m} sets still biased"
            )
        alphas, survivors = unbiased_round(dead, k, s, cfg)
        alpha_ints = [a.value for a in alphas]
        for i in range(n):
            vec_ints[i] |= space.eval_var(i, alpha_ints) << length
        new_dead = set(dead.sets) - set(survivors.sets)
        if len(new_dead) * (1 << s) > dead.m * k * d:
            raise BuildError("dead-set contraction violated the per-round bound")
        dead = NeighborhoodFamily(n, tuple(e for e in dead.sets if e in new_dead))
        report.dead_counts.append(dead.m)
        length += s
        report.rounds += 1
    report.length = length
    return vec_ints


def build_unbiased_code_with_report(
    family: NeighborhoodFamily, config: CodesConfig | None = None
) -> tuple[Code, UnbiasedBuildReport]:
    cfg = config or CodesConfig()
    report = UnbiasedBuildReport()
    n = family.n
    sets = family.distinct_nonempty()
    if not sets:
        return Code.make([BitVec.zeros(0)] * n), report

    if len(sets) < n:
        # restrict to one representative coordinate per set, zero elsewhere
        report.restricted = True
        reps = {min(e) for e in sets}
        order = sorted(reps)
        pos = {v: t for t, v in enumerate(order)}
        restricted = {tuple(sorted(pos[i] for i in e if i in reps)) for e in sets}
        vec_ints = _build_unbiased_core(len(order), sorted(restricted), cfg, report)
        full = [0] * n
        for v, t in pos.items():
            full[v] = vec_ints[t]
        vec_ints = full
    else:
        vec_ints = _build_unbiased_core(n, sets, cfg, report)

    code = Code.make([BitVec(v, report.length) for v in vec_ints])
    for e in sets:
        if code_xor(code, e).is_zero():
            raise BuildError(f"constructed code is still biased for {e}")
    return code, report


def build_unbiased_code(family: NeighborhoodFamily, config: CodesConfig | None = None) -> Code:
    """A code whose XOR over every nonempty listed set is nonzero."""
    return build_unbiased_code_with_report(family, config)[0]


# --- the rank-based potential for the fooling construction -------------------

def _subset_rank_vectors(
    members: Sequence[int],
    exps: Sequence[tuple[int, ...]],
    hists: Sequence[int],
    hist_bits: int,
    coeffs: Sequence[int],
    j: int,
    k: int,
    s: int,
) -> list[int]:
    """Per-member vectors: completed-round values plus the coefficient listing
    of the partially evaluated monomial, packed into ints for rank_gf2."""
    residual_slot: dict[tuple[int, ...], int] = {}
    vecs = []
    for t in range(len(members)):
        key = exps[t][j:]
        slot = residual_slot.setdefault(key, len(residual_slot))
        vecs.append(hists[t] | (coeffs[t] << (hist_bits + slot * s)))
    return vecs


def potential_F(
    e: Iterable[int],
    alpha_rounds: Sequence[Sequence[FieldElem]],
    alpha_prefix: Sequence[FieldElem],
    k: int,
    d: int,
    s: int,
) -> int:
    """Number of nonempty subsets f of e whose polynomial was zero in every
    completed round and is identically zero after the current partial round.

    Computed as 2^(|e| - rank) - 1 from the per-member vector set of
    completed-round values plus partial-evaluation coefficients; the map
    f -> (values, coefficients) is GF(2)-linear, so the satisfying subsets
    form the kernel of the matrix whose rows are the member vectors.
    """
    members = sorted(set(e))
    if not members:
        return 0
    for rnd in alpha_rounds:
        if len(rnd) != k:
            raise ValueError("completed rounds must each list k field values")
    j = len(alpha_prefix)
    if j > k:
        raise ValueError("alpha prefix longer than k")
    space = _MonomialSpace(max(members) + 1, k, d, s)
    exps = [space.exps[i] for i in members]
    hist_bits = len(alpha_rounds) * s
    hists = []
    for t, i in enumerate(members):
        h = 0
        for r, rnd in enumerate(alpha_rounds):
            h |= space.eval_var(i, [a.value for a in rnd]) << (r * s)
        hists.append(h)
    coeffs = []
    for t in range(len(members)):
        c = 1
        for pos in range(j):
            u = exps[t][pos]
            if u:
                c = space.mul(c, space.pow(alpha_prefix[pos].value, u))
        coeffs.append(c)
    vecs = _subset_rank_vectors(members, exps, hists, hist_bits, coeffs, j, k, s)
    rank = rank_gf2_ints(vecs)
    return (1 << (len(members) - rank)) - 1


# --- neighborhood-fooling code construction ---------------------------------

@dataclass
class FoolingBuildReport:
    k: int = 0
    s: int = 0
    d: int = 0
    rounds: int = 0
    h_history: list[int] = field(default_factory=list)
    dropped_coords: int = 0
    length: int = 0
    length_cap: int = 0


def build_fooling_code_with_report(
    family: NeighborhoodFamily, config: CodesConfig | None = None
) -> tuple[Code, FoolingBuildReport]:
    cfg = config or CodesConfig()
    report = FoolingBuildReport()
    n = family.n
    sets = family.distinct_nonempty()
    if not sets:
        return Code.make([BitVec.zeros(0)] * n), report

    used = sorted({i for e in sets for i in e})
    pos = {v: t for t, v in enumerate(used)}
    report.dropped_coords = n - len(used)
    work = [tuple(pos[i] for i in e) for e in sets]
    nw = len(used)
    m = len(work)
    w = max(len(e) for e in work)

    k = _k_formula(m * w)
    d = _ceil_root(nw, k) - 1
    h0 = sum((1 << len(e)) - 1 for e in work)
    s = _pick_s(k, d, math.log(max(2, h0)), _s_formula(m * w), cfg)
    cap = _length_cap(m, w, cfg)
    report.k, report.s, report.d, report.length_cap = k, d, s, cap
    space = _MonomialSpace(nw, k, d, s)
    exps_by_set = [[space.exps[i] for i in e] for e in work]

    var_hist = [0] * nw  # per variable: completed-round monomial values, s bits each
    f_prev = [(1 << len(e)) - 1 for e in work]  # F_{i-1,k,e}: 2^|e|-1 before round one
    report.h_history = [h0]
    rounds = 0
    while True:
        # a set whose end-of-round potential reached zero can never revive:
        # later rounds require the previous round values to be zero
        active = [t for t in range(len(work)) if f_prev[t] > 0]
        if not active:
            break
        h_prev_round = sum(f_prev[t] for t in active)
        if (rounds + 1) * s > cap:
            raise BuildError(
                f"fooling code exceeded the length cap {cap} with potential {h_prev_round}"
            )
        hist_bits = rounds * s
        active_vars = sorted({i for t in active for i in work[t]})
        var_coeff = {i: 1 for i in active_vars}
        h_prev_pos = 0  # F_{i,0,e} = 0: the untouched polynomial is never zero
        f_cur = dict.fromkeys(active, 0)
        for j in range(k):
            best = None  # (h, alpha, coeffs, per_set)
            for alpha in range(1 << s):
                pows = space.powers(alpha)
                nc = {
                    i: space.mul(var_coeff[i], pows[space.exps[i][j]])
                    if space.exps[i][j] else var_coeff[i]
                    for i in active_vars
                }
                h = 0
                per_set = {}
                for t in active:
                    e = work[t]
                    vecs = _subset_rank_vectors(
                        e, exps_by_set[t], [var_hist[i] for i in e], hist_bits,
                        [nc[i] for i in e], j + 1, k, s,
                    )
                    f = (1 << (len(e) - rank_gf2_ints(vecs))) - 1
                    per_set[t] = f
                    h += f
                if best is None or h < best[0]:
                    best = (h, alpha, nc, per_set)
            best_h, best_alpha, var_coeff, f_cur = best
            # greedy minimum is at most the average:
            # H_{i,j} <= H_{i,j-1} + (d/2^s)(H_{i-1,k} - H_{i,j-1})
            if best_h * (1 << s) > h_prev_pos * (1 << s) + d * (h_prev_round - h_prev_pos):
                raise BuildError("fooling potential exceeded the per-position bound")
            h_prev_pos = best_h
        h_round = h_prev_pos
        if h_round * (1 << s) > k * d * h_prev_round:
            raise BuildError("fooling potential exceeded the per-round contraction bound")
        for i in active_vars:
            var_hist[i] |= var_coeff[i] << hist_bits
        for t in active:
            f_prev[t] = f_cur[t]
        rounds += 1
        report.rounds = rounds
        report.h_history.append(h_round)
        if h_round == 0:
            break

    length = rounds * s
    report.length = length
    vec_ints = [0] * n
    for i_local, var in enumerate(used):
        vec_ints[var] = var_hist[i_local]
    code = Code.make([BitVec(v, length) for v in vec_ints])
    return code, report


def build_fooling_code(family: NeighborhoodFamily, config: CodesConfig | None = None) -> Code:
    """A code whose induced space fools every listed neighborhood: the XOR over
    each nonempty subset of each listed set is nonzero."""
    return build_fooling_code_with_report(family, config)[0]


# --- exhaustive verification --------------------------------------------------

def _pattern_counts(code: Code, e: Sequence[int]) -> np.ndarray:
    """Counts of each |e|-bit pattern over all 2^L seeds (exhaustive, vectorized)."""
    L = code.length
    width = len(e)
    if width > 16:
        raise BudgetError(f"pattern width {width} exceeds the 16-bit enumeration limit")
    dtype = np.uint8 if width <= 8 else np.uint16
    pats = np.zeros(1 << L, dtype=dtype)
    for t in range(L):
        contrib = 0
        for idx, i in enumerate(e):
            contrib |= code.vectors[i].bit(t) << idx
        half = 1 << t
        np.bitwise_xor(pats[:half], dtype(contrib), out=pats[half : 2 * half])
    return np.bincount(pats, minlength=1 << width)


def verify_code(
    code: Code,
    family: NeighborhoodFamily,
    mode: str,
    config: CodesConfig | None = None,
) -> FoolingCertificate | FoolingFailure:
    """Check a code against a family.

    unbiased mode checks algebraically that the XOR over each nonempty listed
    set is nonzero.  fooling mode enumerates all 2^L seeds and requires every
    pattern on every listed set to be hit exactly 2^(L-|e|) times; the first
    violated (set, pattern) is reported on failure.
    """
    cfg = config or CodesConfig()
    if mode not in ("unbiased", "fooling"):
        raise ValueError(f"unknown mode {mode!r}")
    if family.n != code.n:
        raise DimensionError("family and code sizes differ")

    if mode == "unbiased":
        for idx, e in enumerate(family.sets):
            if e and code_xor(code, e).is_zero():
                return FoolingFailure(mode=mode, set_index=idx, bad_set=e)
        return FoolingCertificate(family=family, mode=mode, checked_seed_count=0)

    L = code.length
    if L > cfg.seed_budget_log2:
        raise BudgetError(f"2^{L} seeds exceed the enumeration budget 2^{cfg.seed_budget_log2}")
    cache: dict[tuple[int, ...], FoolingFailure | None] = {}
    for idx, e in enumerate(family.sets):
        if e in cache:
            hit = cache[e]
            if hit is not None:
                return FoolingFailure(mode=mode, set_index=idx, bad_set=e,
                                      pattern=hit.pattern, count=hit.count, expected=hit.expected)
            continue
        counts = _pattern_counts(code, e)
        expected = Fraction(1 << L, 1 << len(e))
        bad = None
        for z in range(1 << len(e)):
            if counts[z] != expected:
                pattern = tuple((z >> t) & 1 for t in range(len(e)))
                bad = FoolingFailure(mode=mode, set_index=idx, bad_set=e,
                                     pattern=pattern, count=int(counts[z]), expected=expected)
                break
        cache[e] = bad
        if bad is not None:
            return bad
    return FoolingCertificate(family=family, mode=mode, checked_seed_count=1 << L)


# --- file formats -------------------------------------------------------------

def save_family(family: NeighborhoodFamily, path: str):
    """Header "n m", then m lines of space-separated 1-based indices."""
    with open(path, "w") as fh:
        fh.write(f"{family.n} {family.m}\n")
        for e in family.sets:
            fh.write(" ".join(str(i + 1) for i in e) + "\n")


def load_family(path: str) -> NeighborhoodFamily:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty family file")
    try:
        n, m = map(int, lines[0].split())
    except ValueError:
        raise ValueError(f"{path}:1: expected header 'n m'") from None
    sets = []
    for ln in range(1, m + 1):
        if ln >= len(lines):
            raise ValueError(f"{path}: expected {m} set lines, found {ln - 1}")
        raw = lines[ln].split()
        try:
            idx = [int(tok) - 1 for tok in raw]
        except ValueError:
            raise ValueError(f"{path}:{ln + 1}: non-integer index") from None
        for i in idx:
            if not 0 <= i < n:
                raise ValueError(f"{path}:{ln + 1}: index {i + 1} outside 1..{n}")
        sets.append(tuple(sorted(set(idx))))
    return NeighborhoodFamily(n, tuple(sets))


def save_code(code: Code, path: str):
    """Header "L n", then n hex rows in BitVec format."""
    with open(path, "w") as fh:
        fh.write(f"{code.length} {code.n}\n")
        for v in code.vectors:
            fh.write(v.to_hex() + "\n")


def load_code(path: str) -> Code:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty code file")
    try:
        L, n = map(int, lines[0].split())
    except ValueError:
        raise ValueError(f"{path}:1: expected header 'L n'") from None
    if len(lines) < n + 1:
        raise ValueError(f"{path}: expected {n} vector rows, found {len(lines) - 1}")
    vectors = []
    for ln in range(1, n + 1):
        try:
            vectors.append(BitVec.from_hex(lines[ln].strip(), L))
        except (ValueError, DimensionError) as exc:
            raise ValueError(f"{path}:{ln + 1}: {exc}") from None
    return Code.make(vectors)
