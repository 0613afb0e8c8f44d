"""End-to-end coloring solvers built on the junta optimizers and the
deterministic resampling solver.

Rainbow coloring maps each vertex value x in M_b to the color floor(d*x/2^b)
and maximizes the number of hyperedges seeing all d colors; its oracle
evaluates the exact rainbow probability of one edge under a graded partial
assignment by chaining prefix cells, each cell contributing an elementary
symmetric count over its reachable color multiplicities.  Defective coloring
iterates degree-splitting stages and falls back to a verified greedy finisher;
domatic partition runs the two-phase bad-event construction with test hooks
for its concentration constants.

Graph files: header "n m", then m lines "u v" (1-based).  Hypergraph files:
header "n m d", then m lines of d vertex indices (1-based).  Colorings are
JSON {"colors": [...], "verification": {...}}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from derand.gf2 import BitVec, DimensionError
from derand.juntas import (
    Bit,
    FuncOracle,
    Junta,
    JuntaSystem,
    OptimizerConfig,
    OracleError,
    OracleKind,
    optimize_graded,
    system_expectation,
)
from derand.lll import (
    BadEvent,
    LLLConditionError,
    LLLConfig,
    LLLInstance,
    deterministic_mt,
)

__all__ = [
    "Hypergraph",
    "Graph",
    "ColorSchedule",
    "ScheduleStage",
    "RainbowResult",
    "SplitResult",
    "DefectiveResult",
    "DomaticParams",
    "DomaticResult",
    "AppsConfig",
    "rainbow_peo",
    "RainbowOracle",
    "rainbow_color",
    "count_rainbow",
    "split_degrees",
    "color_schedule",
    "defective_color",
    "max_defect",
    "domatic_partition",
    "domatic_coverage_ok",
    "load_hypergraph",
    "save_hypergraph",
    "load_graph",
    "save_graph",
    "save_coloring",
    "load_coloring",
]


@dataclass(frozen=True)
class AppsConfig:
    rainbow_b: int | None = None       # color-resolution bits; None derives the default
    rainbow_b_max: int = 26
    split_K: float = 4.0               # concentration constant in the degree splitter
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    lll: LLLConfig = field(default_factory=LLLConfig)


# --- basic structures ------------------------------------------------------------


@dataclass(frozen=True)
class Hypergraph:
    n: int
    edges: tuple[tuple[int, ...], ...]

    @classmethod
    def make(cls, n: int, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        norm = []
        d = None
        for e in edges:
            e = tuple(sorted(set(e)))
            if d is None:
                d = len(e)
            if len(e) != d:
                raise DimensionError("hypergraph is not uniform")
            for v in e:
                if not 0 <= v < n:
                    raise DimensionError(f"vertex {v} outside [0, {n})")
            norm.append(e)
        return cls(n, tuple(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def d(self) -> int:
        return len(self.edges[0]) if self.edges else 0


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def make(cls, n: int, edges: Iterable[Iterable[int]]) -> "Graph":
        seen = set()
        norm = []
        for e in edges:
            u, v = sorted(e)
            if u == v:
                raise DimensionError("self-loop")
            if not 0 <= u < n or not 0 <= v < n:
                raise DimensionError(f"edge ({u}, {v}) outside [0, {n})")
            if (u, v) in seen:
                continue
            seen.add((u, v))
            norm.append((u, v))
        return cls(n, tuple(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def max_degree(self) -> int:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return max(deg, default=0)


# --- the rainbow PEO ----------------------------------------------------------------


def _color_of(x: int, d: int, b: int) -> int:
    return (d * x) >> b


def _cell_color_range(c: int, rem: int, d: int, b: int) -> tuple[int, int]:
    lo = _color_of(c << rem, d, b)
    hi = _color_of(((c + 1) << rem) - 1, d, b)
    return lo, hi


def _color_count_in_cell(k: int, c: int, rem: int, d: int, b: int) -> int:
    """Number of values x in cell c (rem free low bits) with color k."""
    x_lo = -(-((k << b)) // d)            # ceil(2^b k / d)
    x_hi = -(-(((k + 1) << b)) // d) - 1  # last x with color k
    lo = max(x_lo, c << rem)
    hi = min(x_hi, ((c + 1) << rem) - 1)
    return max(0, hi - lo + 1)


def _assert_cell_structure(prefix_len: int, d: int, b: int):
    """At coarse levels (cells at least one color wide) each color is reachable
    from one prefix cell or two adjacent ones, and each cell shares at most one
    color with its successor.  At finer levels a color legitimately spans many
    whole cells and the chain links nonempty cells by their shared color
    instead, so the two-cell claim is only asserted in its regime."""
    rem = b - prefix_len
    if (1 << rem) * d < (1 << b):
        return
    shared_of_cell: dict[int, int] = {}
    for k in range(d):
        x_lo = -(-((k << b)) // d)
        x_hi = -(-(((k + 1) << b)) // d) - 1
        c_min, c_max = x_lo >> rem, x_hi >> rem
        if c_max - c_min > 1:
            raise AssertionError(f"color {k} spans {c_max - c_min + 1} cells")
        if c_max == c_min + 1:
            if c_min in shared_of_cell:
                raise AssertionError(f"cell {c_min} shares two colors")
            shared_of_cell[c_min] = k


def _cell_pass_prob(
    sigma: int, counts: dict[int, int], rem: int,
    exclude_left: int | None, boundary: int | None, use_boundary: bool,
) -> Fraction:
    """P(sigma vertices of one cell get distinct colors, avoiding the left
    boundary color and hitting the right boundary color iff use_boundary)."""
    avail = dict(counts)
    if exclude_left is not None:
        avail.pop(exclude_left, None)
    if use_boundary:
        if boundary is None or boundary not in avail or avail[boundary] == 0:
            return Fraction(0)
    nb = avail.pop(boundary, 0) if boundary is not None else 0
    ns = [v for v in avail.values() if v]
    need = sigma - (1 if use_boundary else 0)
    if need < 0 or need > len(ns):
        return Fraction(0)
    # elementary symmetric sum e_need over the remaining multiplicities
    es = [1] + [0] * need
    for nv in ns:
        for t in range(min(need, len(es) - 1), 0, -1):
            es[t] += es[t - 1] * nv
    ways = math.factorial(sigma) * es[need]
    if use_boundary:
        ways *= nb
    return Fraction(ways, (1 << rem) ** sigma)


def _chain_prob(
    cells: list[tuple[int, int]], rem: int, d: int, b: int
) -> Fraction:
    """Divide-and-conquer over the nonempty prefix cells.

    Colors are consecutive value intervals, so two nonempty cells share at
    most one color, namely the first cell's top color when it equals the next
    cell's bottom color; the junction state z says whether that shared color
    was used on the left."""
    if not cells:
        return Fraction(1)
    info = []
    for idx, (c, sigma) in enumerate(cells):
        k_lo, k_hi = _cell_color_range(c, rem, d, b)
        counts = {
            k: _color_count_in_cell(k, c, rem, d, b) for k in range(k_lo, k_hi + 1)
        }
        boundary = None
        if idx + 1 < len(cells):
            nxt_lo, _ = _cell_color_range(cells[idx + 1][0], rem, d, b)
            if k_hi == nxt_lo:
                boundary = k_hi
        info.append((sigma, counts, k_lo, boundary))

    def solve(lo: int, hi: int, z0: int, z1: int) -> Fraction:
        if lo == hi:
            sigma, counts, k_lo, boundary = info[lo]
            exclude = k_lo if z0 else None
            return _cell_pass_prob(sigma, counts, rem, exclude, boundary, bool(z1))
        mid = (lo + hi) // 2
        shares = info[mid][3] is not None
        total = Fraction(0)
        if shares:
            for z in (0, 1):
                left = solve(lo, mid, z0, z)
                if left:
                    total += left * solve(mid + 1, hi, z, z1)
        else:
            left = solve(lo, mid, z0, 0) + solve(lo, mid, z0, 1)
            if left:
                total = left * solve(mid + 1, hi, 0, z1)
        return total

    return solve(0, len(info) - 1, 0, 0) + solve(0, len(info) - 1, 0, 1)


def rainbow_peo(local: Sequence[Bit], d: int, b: int) -> Fraction:
    """Exact probability that one d-edge is rainbow under the coloring
    floor(d*x/2^b) when the unknown bits of the graded query are fair coins.

    The known most-significant bits place each vertex in a prefix cell;
    adjacent cells share at most one reachable color, so the cells chain with
    a one-bit boundary state.  Vertices undecided at the current bit-level
    split binomially between two adjacent cells.
    """
    if d < 2:
        raise ValueError("rainbow edges need d >= 2")
    if d > (1 << b):
        raise ValueError(f"cannot encode {d} colors in {b} bits")
    if len(local) != d * b:
        raise DimensionError("local view length differs from d*b")
    per_vertex = [local[t * b : (t + 1) * b] for t in range(d)]
    level = 0
    while level < b and all(v[level] is not None for v in per_vertex):
        level += 1
    mixed = level < b and any(v[level] is not None for v in per_vertex)
    for v in per_vertex:
        tail_from = level + 1 if mixed else level
        if any(bit is not None for bit in v[tail_from:]):
            raise OracleError("rainbow queries must be graded")

    prefix_len = level + 1 if mixed else level
    rem = b - prefix_len
    _assert_cell_structure(prefix_len, d, b)

    fixed_cells: dict[int, int] = {}
    undecided_groups: dict[int, int] = {}
    for v in per_vertex:
        head = 0
        for j in range(level):
            head = (head << 1) | v[j]
        if not mixed:
            fixed_cells[head] = fixed_cells.get(head, 0) + 1
        elif v[level] is not None:
            cell = (head << 1) | v[level]
            fixed_cells[cell] = fixed_cells.get(cell, 0) + 1
        else:
            undecided_groups[head] = undecided_groups.get(head, 0) + 1

    groups = sorted(undecided_groups.items())
    total = Fraction(0)
    denom = 1 << sum(cnt for _, cnt in groups)

    def enumerate_splits(idx: int, occupancy: dict[int, int], ways: int):
        nonlocal total
        if idx == len(groups):
            cells = sorted((c, sigma) for c, sigma in occupancy.items() if sigma)
            total += Fraction(ways, denom) * _chain_prob(cells, rem, d, b)
            return
        head, cnt = groups[idx]
        for low in range(cnt + 1):
            occ = dict(occupancy)
            if low:
                occ[head * 2] = occ.get(head * 2, 0) + low
            if cnt - low:
                occ[head * 2 + 1] = occ.get(head * 2 + 1, 0) + (cnt - low)
            enumerate_splits(idx + 1, occ, ways * math.comb(cnt, low))

    enumerate_splits(0, dict(fixed_cells), 1)
    return total


class RainbowOracle(FuncOracle):
    """Graded PEO for the indicator that one edge is rainbow."""

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, d: int, b: int):
        self.d = d
        self.b = b

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        return rainbow_peo(local, self.d, self.b)

    def evaluate(self, values: Sequence[int]) -> Fraction:
        colors = [_color_of(v, self.d, self.b) for v in values]
        return Fraction(1 if len(set(colors)) == len(colors) else 0)


# --- rainbow coloring ------------------------------------------------------------------


@dataclass
class RainbowResult:
    colors: list[int]
    rainbow_count: int
    target: int
    b: int
    expectation: Fraction
    shortcut: bool


def count_rainbow(hg: Hypergraph, colors: Sequence[int]) -> int:
    return sum(1 for e in hg.edges if len({colors[v] for v in e}) == len(e))


def rainbow_color(hg: Hypergraph, config: AppsConfig | None = None) -> RainbowResult:
    """A d-coloring with at least ceil(m * d!/d^d) rainbow edges.

    Small targets take the single-edge shortcut; otherwise every edge gets a
    rainbow-probability oracle and the graded optimizer fixes vertex values
    level by level, with the color-resolution b raised until the expected
    rainbow count exceeds (m*d! - 1)/d^d.
    """
    cfg = config or AppsConfig()
    d, m = hg.d, hg.m
    if m == 0:
        return RainbowResult([0] * hg.n, 0, 0, 0, Fraction(0), True)
    if d < 2:
        raise ValueError("rainbow coloring needs d >= 2")
    target = -(-m * math.factorial(d) // d**d)
    colors = [0] * hg.n
    if target <= 1:
        for idx, v in enumerate(hg.edges[0]):
            colors[v] = idx
        got = count_rainbow(hg, colors)
        if got < target:
            raise RuntimeError("single-edge shortcut failed its bound")
        return RainbowResult(colors, got, target, 0, Fraction(0), True)

    used = sorted({v for e in hg.edges for v in e})
    slot = {v: t for t, v in enumerate(used)}
    bound = Fraction(m * math.factorial(d) - 1, d**d)
    b = cfg.rainbow_b
    if b is None:
        b = max(1, (d - 1).bit_length()) + max(1, math.ceil(math.log2(4 * m * d * d)))
    while True:
        if b > cfg.rainbow_b_max:
            raise RuntimeError(f"color resolution exceeded {cfg.rainbow_b_max} bits")
        per_edge = rainbow_peo([None] * (d * b), d, b)
        expectation = m * per_edge
        if expectation > bound:
            break
        b += 1

    oracle = RainbowOracle(d, b)
    funcs = tuple(
        Junta(tuple(sorted(slot[v] for v in e)), oracle) for e in hg.edges
    )
    system = JuntaSystem(len(used), b, funcs)
    x = optimize_graded(system, cfg.optimizer)
    for v, t in slot.items():
        colors[v] = _color_of(x[t], d, b)
    got = count_rainbow(hg, colors)
    if got < target:
        raise RuntimeError(f"rainbow count {got} fell below the target {target}")
    return RainbowResult(colors, got, target, b, expectation, False)


# --- degree splitting -------------------------------------------------------------------


def _interval_match_prob(bits: Sequence[Bit], r: int, lo: int, hi: int) -> Fraction:
    """P(lo <= u <= hi) for an r-bit u with a graded (prefix-known) bit view."""
    val = 0
    known = 0
    for j in range(r):
        if bits[j] is None:
            if any(x is not None for x in bits[j + 1 :]):
                raise OracleError("non-graded per-vertex bits in a color query")
            break
        val = (val << 1) | bits[j]
        known += 1
    rem = r - known
    u_lo, u_hi = val << rem, ((val + 1) << rem) - 1
    overlap = min(hi, u_hi) - max(lo, u_lo) + 1
    return Fraction(max(0, overlap), 1 << rem)


def _color_interval(color: int, c: int, r: int) -> tuple[int, int]:
    """Values u in M_r with floor(c*u/2^r) == color."""
    lo = -(-(color << r) // c)
    hi = -(-((color + 1) << r) // c) - 1
    return lo, hi


class SameColorCountOracle(FuncOracle):
    """Indicator that at least (threshold) neighbors share the center's color,
    colors drawn as floor(c*u/2^r) from r-bit vertex values.

    Support order: the center vertex takes its sorted position among
    [center] + neighbors; exact via a count distribution per candidate color.
    """

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, c: int, r: int, center_slot: int, threshold: int):
        self.c = c
        self.r = r
        self.center_slot = center_slot
        self.threshold = threshold

    def _tail(self, qs: list[Fraction]) -> Fraction:
        if self.threshold <= 0:
            return Fraction(1)
        dist = [Fraction(1)] + [Fraction(0)] * len(qs)
        top = 0
        for q in qs:
            for t in range(min(top, self.threshold - 1), -1, -1):
                p = dist[t]
                if p:
                    dist[t + 1] += p * q
                    dist[t] = p * (1 - q)
            top = min(top + 1, self.threshold)
        return sum(dist[self.threshold :], Fraction(0))

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        w = len(local) // self.r
        views = [local[t * self.r : (t + 1) * self.r] for t in range(w)]
        total = Fraction(0)
        for color in range(self.c):
            lo, hi = _color_interval(color, self.c, self.r)
            if lo > hi:
                continue
            p_center = _interval_match_prob(views[self.center_slot], self.r, lo, hi)
            if p_center == 0:
                continue
            qs = [
                _interval_match_prob(views[t], self.r, lo, hi)
                for t in range(w)
                if t != self.center_slot
            ]
            total += p_center * self._tail(qs)
        return total

    def evaluate(self, values: Sequence[int]) -> Fraction:
        colors = [_color_of(v, self.c, self.r) for v in values]
        mine = colors[self.center_slot]
        count = sum(
            1 for t, col in enumerate(colors) if t != self.center_slot and col == mine
        )
        return Fraction(1 if count >= self.threshold else 0)


@dataclass
class SplitResult:
    colors: list[int]
    cap: int
    j: int
    p: Fraction
    d: int
    resamples: int


def split_degrees(
    graph: Graph, j: int, K: float, config: AppsConfig | None = None
) -> SplitResult:
    """A 2^j-coloring where every vertex has at most
    (deg/2^j)(1 + K sqrt((2^j/deg) log deg)) same-color neighbors, via the
    deterministic resampling solver on per-vertex count events (epsilon 1/2).
    """
    cfg = config or AppsConfig()
    delta = graph.max_degree()
    if j < 0:
        raise ValueError("j must be >= 0")
    if j == 0:
        return SplitResult([0] * graph.n, delta, 0, Fraction(0), 0, 0)
    if delta < 2 or (1 << j) > delta / (K * math.log(max(2.0, delta))):
        raise ValueError(
            f"j={j} violates 2^j <= degree/(K log degree) for degree {delta}"
        )
    cap = math.floor(
        (delta / (1 << j)) * (1 + K * math.sqrt(((1 << j) / delta) * math.log(delta)))
    )
    adj = graph.adjacency()
    events = []
    for v in range(graph.n):
        if not adj[v]:
            continue
        support = tuple(sorted([v] + adj[v]))
        oracle = SameColorCountOracle(1 << j, j, support.index(v), cap + 1)
        p_exact = oracle.expectation([None] * (len(support) * j))
        if p_exact == 0:
            continue
        events.append(BadEvent(support, oracle, p_exact, kind="samecolor"))
    inst = LLLInstance(graph.n, j, tuple(events))
    p = inst.max_p()
    d = inst.dependency_degree()
    if events and math.e * float(p) * d ** 1.5 > 1.0:
        raise LLLConditionError(p, d, 0.5)
    result = deterministic_mt(inst, epsilon=0.5, config=cfg.lll)
    colors = [_color_of(u, 1 << j, j) for u in result.assignment]
    for v in range(graph.n):
        same = sum(1 for w in adj[v] if colors[w] == colors[v])
        if same > cap:
            raise RuntimeError("degree split violated its cap")
    return SplitResult(colors, cap, j, p, d, result.resamples)


# --- the stage schedule and defective coloring ----------------------------------------------


@dataclass(frozen=True)
class ScheduleStage:
    delta: float
    j: int
    colors: int
    b: float
    in_regime: bool


@dataclass(frozen=True)
class ColorSchedule:
    """The staged degree-reduction plan: delta_i shrinks by roughly log^2 per
    stage while the color count multiplies by 2^{j_i}."""

    K: float
    k: int
    stages: tuple[ScheduleStage, ...]

    def regime_stages(self) -> list[ScheduleStage]:
        return [st for st in self.stages if st.in_regime]


def color_schedule(delta: int, k: int, K: float) -> ColorSchedule:
    b = float(delta)
    bs = [b]
    while b >= k and math.log(max(2.0, b)) ** 2 / 2 >= 1 and len(bs) < 64:
        b = math.log(b) ** 2 / 2
        if b >= bs[-1]:
            break
        bs.append(b)
    r = max(0, len(bs) - 2)
    stages = []
    delta_i = float(delta)
    colors = 1
    for i in range(r + 1):
        log_d = math.log(max(2.0, delta_i))
        if i < r:
            j = max(0, math.ceil(math.log2(max(1.0, delta_i / log_d**2))))
        else:
            j = max(0, math.ceil(math.log2(max(1.0, delta_i / max(1, k)))))
        b_i = bs[i] if i < len(bs) else bs[-1]
        in_regime = (
            j >= 1
            and k <= b_i <= delta_i <= 4 * b_i
            and (1 << j) <= delta_i / (K * log_d)
        )
        stages.append(ScheduleStage(delta_i, j, colors, b_i, in_regime))
        colors *= 1 << j
        delta_i = (delta_i / (1 << j)) * (1 + K * math.sqrt(2) / math.sqrt(log_d))
    return ColorSchedule(K, k, stages)


def _greedy_defective(adj: list[list[int]], vertices: list[int], k: int) -> dict[int, int]:
    """k-defective coloring of the induced subgraph with ceil((deg+1)/(k+1))
    colors: recolor any violating vertex to its least-loaded color; the count
    of monochromatic edges strictly drops each move."""
    vset = set(vertices)
    local_deg = {v: sum(1 for w in adj[v] if w in vset) for v in vertices}
    delta = max(local_deg.values(), default=0)
    c = max(1, -(-(delta + 1) // (k + 1)))
    color = {v: 0 for v in vertices}
    while True:
        violator = None
        for v in vertices:
            same = sum(1 for w in adj[v] if w in vset and color[w] == color[v])
            if same > k:
                violator = v
                break
        if violator is None:
            return color
        loads = [0] * c
        for w in adj[violator]:
            if w in vset:
                loads[color[w]] += 1
        color[violator] = min(range(c), key=lambda col: (loads[col], col))


@dataclass
class StageReport:
    kind: str          # "split", "ce-split", or "greedy"
    classes: int
    max_degree_before: int
    cap: int
    colors_used: int


@dataclass
class DefectiveResult:
    colors: list[int]
    color_count: int
    max_defect: int
    defect_bound: int
    k: int
    schedule: ColorSchedule
    stages: list[StageReport]


def max_defect(graph: Graph, colors: Sequence[int]) -> int:
    adj = graph.adjacency()
    worst = 0
    for v in range(graph.n):
        same = sum(1 for w in adj[v] if colors[w] == colors[v])
        worst = max(worst, same)
    return worst


def _ce_split_cap(
    graph: Graph, adj: list[list[int]], classes: list[list[int]],
    c0: int, k: int, delta_cur: int,
) -> int | None:
    """Smallest same-group cap certifiable by the per-class union bounds when
    splitting every class into c0 groups; None when nothing below the current
    degree certifies."""
    r = max(1, (c0 - 1).bit_length()) + (0 if c0 & (c0 - 1) == 0 else 8)
    for cap in range(k, delta_cur):
        ok = True
        for cls in classes:
            vset = set(cls)
            total = Fraction(0)
            for v in cls:
                deg = sum(1 for w in adj[v] if w in vset)
                if deg <= cap:
                    continue
                oracle = SameColorCountOracle(c0, r, 0, cap + 1)
                total += oracle.expectation([None] * ((deg + 1) * r))
                if total >= 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return cap
    return None


def _ce_split_class(
    graph: Graph, adj: list[list[int]], vertices: list[int],
    c0: int, cap: int, cfg: AppsConfig,
) -> dict[int, int] | None:
    """Split one class into c0 color groups so every vertex keeps at most cap
    same-group neighbors, by minimizing the expected count of violations with
    the graded optimizer; None when the union bound cannot certify it."""
    vset = set(vertices)
    slot = {v: t for t, v in enumerate(vertices)}
    r = max(1, (c0 - 1).bit_length()) + (0 if c0 & (c0 - 1) == 0 else 8)
    funcs = []
    for v in vertices:
        nbrs = [w for w in adj[v] if w in vset]
        if len(nbrs) <= cap:
            continue
        support = tuple(sorted([slot[v]] + [slot[w] for w in nbrs]))
        oracle = SameColorCountOracle(c0, r, support.index(slot[v]), cap + 1)
        funcs.append(Junta(support, oracle, Fraction(-1)))
    if not funcs:
        return {v: 0 for v in vertices}
    system = JuntaSystem(len(vertices), r, tuple(funcs))
    if -system_expectation(system) >= 1:
        return None
    x = optimize_graded(system, cfg.optimizer)
    colors = {v: _color_of(x[slot[v]], c0, r) for v in vertices}
    for v in vertices:
        same = sum(1 for w in adj[v] if w in vset and colors[w] == colors[v])
        if same > cap:
            raise RuntimeError("conditional-expectation split missed its cap")
    return colors


def defective_color(graph: Graph, k: int, config: AppsConfig | None = None) -> DefectiveResult:
    """A coloring where every vertex has at most k same-color neighbors, using
    a reported number of colors (at most ceil((degree+1)/(k+1)) per residual
    class).

    Follows the staged pipeline: degree-splitting stages while their
    feasibility checks pass (at desk scale they rarely do, and the stage
    machinery then defers), an expectation-certified class split when it
    lowers the final color bound, then the verified greedy finisher per class.
    """
    cfg = config or AppsConfig()
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    delta = graph.max_degree()
    schedule = color_schedule(delta, k, cfg.split_K)
    for st in schedule.regime_stages():
        if not (st.k <= st.b <= st.delta <= 4 * st.b):
            raise RuntimeError("schedule stage violated its own regime bounds")
    if k >= delta:
        return DefectiveResult(
            [0] * graph.n, 1, delta, min(delta, k), k, schedule,
            [StageReport("greedy", 1, delta, k, 1)],
        )

    adj = graph.adjacency()
    classes: list[list[int]] = [list(range(graph.n))]
    stages: list[StageReport] = []

    for st in schedule.stages:
        delta_cur = 0
        for cls in classes:
            vset = set(cls)
            for v in cls:
                delta_cur = max(delta_cur, sum(1 for w in adj[v] if w in vset))
        if delta_cur <= k:
            break
        if not st.in_regime:
            continue
        try:
            sub_colorings = []
            for cls in classes:
                sub = Graph.make(
                    graph.n, [(u, v) for u, v in graph.edges if u in set(cls) and v in set(cls)]
                )
                split = split_degrees(sub, st.j, cfg.split_K, cfg)
                sub_colorings.append(split)
            nxt: list[list[int]] = []
            for cls, split in zip(classes, sub_colorings):
                buckets: dict[int, list[int]] = {}
                for v in cls:
                    buckets.setdefault(split.colors[v], []).append(v)
                nxt.extend(buckets.values())
            stages.append(
                StageReport(
                    "split", len(classes), delta_cur,
                    max(sp.cap for sp in sub_colorings), 1 << st.j,
                )
            )
            classes = nxt
        except (ValueError, LLLConditionError):
            continue

    # one expectation-certified split when it improves the greedy color bound
    delta_cur = 0
    for cls in classes:
        vset = set(cls)
        for v in cls:
            delta_cur = max(delta_cur, sum(1 for w in adj[v] if w in vset))
    if delta_cur > k:
        log_n = max(1, math.ceil(math.log(max(2, graph.n))))
        c0 = max(2, delta_cur // log_n)
        cap = _ce_split_cap(graph, adj, classes, c0, k, delta_cur)
        helps = (
            cap is not None
            and c0 * -(-(cap + 1) // (k + 1)) < -(-(delta_cur + 1) // (k + 1))
        )
        if helps:
            nxt = []
            done = True
            for cls in classes:
                got = _ce_split_class(graph, adj, cls, c0, cap, cfg)
                if got is None:
                    done = False
                    break
                buckets: dict[int, list[int]] = {}
                for v in cls:
                    buckets.setdefault(got[v], []).append(v)
                nxt.extend(buckets.values())
            if done:
                stages.append(StageReport("ce-split", len(classes), delta_cur, cap, c0))
                classes = nxt

    # greedy finisher: per class, defect k with ceil((deg+1)/(k+1)) colors
    colors = [0] * graph.n
    offset = 0
    finished_classes = 0
    for cls in classes:
        local = _greedy_defective(adj, cls, k)
        used = max(local.values(), default=0) + 1
        for v, col in local.items():
            colors[v] = offset + col
        offset += used
        finished_classes += 1
    stages.append(StageReport("greedy", finished_classes, delta_cur if classes else 0, k, offset))

    achieved = max_defect(graph, colors)
    if achieved > k:
        raise RuntimeError("defective coloring failed verification")
    return DefectiveResult(colors, offset, achieved, k, k, schedule, stages)


# --- domatic partition --------------------------------------------------------------------


class ColorInSetOracle(FuncOracle):
    """Indicator that no support vertex takes the given color (projection from
    r-bit values)."""

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, c: int, r: int, color: int):
        self.c = c
        self.r = r
        self.color = color

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        w = len(local) // self.r
        lo, hi = _color_interval(self.color, self.c, self.r)
        p = Fraction(1)
        for t in range(w):
            q = _interval_match_prob(local[t * self.r : (t + 1) * self.r], self.r, lo, hi)
            p *= 1 - q
            if p == 0:
                break
        return p

    def evaluate(self, values: Sequence[int]) -> Fraction:
        return Fraction(
            0 if any(_color_of(v, self.c, self.r) == self.color for v in values) else 1
        )


class CountBandOracle(FuncOracle):
    """Indicator that the number of support vertices of a given color leaves
    the open band (t_low, t_high)."""

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, c: int, r: int, color: int, t_low: int, t_high: int):
        self.c = c
        self.r = r
        self.color = color
        self.t_low = t_low
        self.t_high = t_high

    def _distribution(self, qs: list[Fraction]) -> list[Fraction]:
        dist = [Fraction(1)]
        for q in qs:
            nxt = [Fraction(0)] * (len(dist) + 1)
            for t, p in enumerate(dist):
                if p:
                    nxt[t] += p * (1 - q)
                    nxt[t + 1] += p * q
            dist = nxt
        return dist

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        w = len(local) // self.r
        lo, hi = _color_interval(self.color, self.c, self.r)
        qs = [
            _interval_match_prob(local[t * self.r : (t + 1) * self.r], self.r, lo, hi)
            for t in range(w)
        ]
        dist = self._distribution(qs)
        low = sum(dist[: self.t_low + 1], Fraction(0)) if self.t_low >= 0 else Fraction(0)
        high = sum(dist[self.t_high :], Fraction(0)) if self.t_high <= w else Fraction(0)
        return low + high

    def evaluate(self, values: Sequence[int]) -> Fraction:
        count = sum(1 for v in values if _color_of(v, self.c, self.r) == self.color)
        return Fraction(1 if count <= self.t_low or count >= self.t_high else 0)


@dataclass(frozen=True)
class DomaticParams:
    """Constants of the two-phase construction; the defaults follow the
    analysis and only bind for very large degrees, so desk tests scale them
    down through these hooks."""

    phi: float = 10.0
    c1: int | None = None
    c2: int | None = None
    t_low: int | None = None
    t_high: int | None = None


@dataclass
class DomaticResult:
    colors: list[int]
    classes: int
    c1: int
    c2: int
    feasible: bool
    note: str
    phase1_p: Fraction | None = None
    phase2_p: Fraction | None = None


def domatic_coverage_ok(graph: Graph, colors: Sequence[int], classes: int) -> bool:
    """Every closed neighborhood must contain all classes."""
    adj = graph.adjacency()
    for v in range(graph.n):
        seen = {colors[v]}
        seen.update(colors[w] for w in adj[v])
        if len(seen) < classes:
            return False
    return True


def domatic_partition(
    graph: Graph, eta: float, params: DomaticParams | None = None,
    config: AppsConfig | None = None,
) -> DomaticResult:
    """A coloring whose every class dominates the graph, of size c1*c2 when
    the two-phase feasibility checks pass; otherwise the trivial single-class
    partition with a note.

    Phase one picks a coarse color per vertex so each vertex sees every coarse
    color a controlled number of times; phase two refines each coarse class so
    each vertex's coarse-j neighbors realize every fine color."""
    cfg = config or AppsConfig()
    if not 0 < eta < 1:
        raise ValueError("eta must be in (0, 1)")
    par = params or DomaticParams()
    degs = [0] * graph.n
    for u, v in graph.edges:
        degs[u] += 1
        degs[v] += 1
    if graph.n == 0:
        return DomaticResult([], 1, 1, 1, False, "empty graph")
    k = degs[0]
    if any(dv != k for dv in degs):
        raise ValueError("domatic partition requires a regular graph")

    logk = math.log(max(2.0, k))
    c1 = par.c1 if par.c1 is not None else math.floor(k / logk**3)
    c2 = par.c2 if par.c2 is not None else math.floor((1 - eta) * logk**2)
    mu = k / max(1, c1) if c1 >= 1 else 0.0
    t_low = par.t_low if par.t_low is not None else math.floor(mu - par.phi * logk**2)
    t_high = par.t_high if par.t_high is not None else math.ceil(mu + par.phi * logk**2)
    epsilon = eta / 2

    def trivial(note: str) -> DomaticResult:
        return DomaticResult([0] * graph.n, 1, 1, 1, False, note)

    if c1 < 2 or c2 < 2:
        return trivial(f"degree {k} too small: c1={c1}, c2={c2}")
    if t_low < 0 or t_high - t_low < 2:
        return trivial(f"band ({t_low}, {t_high}) degenerate for degree {k}")

    adj = graph.adjacency()
    r1 = max(1, (c1 - 1).bit_length()) + (0 if c1 & (c1 - 1) == 0 else 8)
    events1 = []
    for v in range(graph.n):
        support = tuple(sorted(adj[v]))
        for j in range(c1):
            oracle = CountBandOracle(c1, r1, j, t_low, t_high)
            p = oracle.expectation([None] * (len(support) * r1))
            events1.append(BadEvent(support, oracle, p, kind="count-band"))
    inst1 = LLLInstance(graph.n, r1, tuple(events1))
    p1, d1 = inst1.max_p(), inst1.dependency_degree()
    if math.e * float(p1) * d1 ** (1 + epsilon) > 1:
        return trivial(
            f"phase-one condition fails: e*{float(p1):.3g}*{d1}^{1 + epsilon:.2f} > 1"
        )

    try:
        res1 = deterministic_mt(inst1, epsilon, config=cfg.lll)
    except LLLConditionError as exc:
        return trivial(f"phase one refused: {exc}")
    chi1 = [_color_of(u, c1, r1) for u in res1.assignment]
    for v in range(graph.n):
        for j in range(c1):
            cnt = sum(1 for w in adj[v] if chi1[w] == j)
            if cnt <= t_low or cnt >= t_high:
                raise RuntimeError("phase-one coloring violated its band")

    r2 = max(1, (c2 - 1).bit_length()) + (0 if c2 & (c2 - 1) == 0 else 8)
    events2 = []
    for v in range(graph.n):
        for j in range(c1):
            nj = tuple(sorted(w for w in adj[v] if chi1[w] == j))
            for j2 in range(c2):
                oracle = ColorInSetOracle(c2, r2, j2)
                p = oracle.expectation([None] * (len(nj) * r2))
                events2.append(BadEvent(nj, oracle, p, kind="no-color"))
    inst2 = LLLInstance(graph.n, r2, tuple(events2))
    p2, d2 = inst2.max_p(), inst2.dependency_degree()
    if math.e * float(p2) * d2 ** (1 + epsilon) > 1:
        return trivial(
            f"phase-two condition fails: e*{float(p2):.3g}*{d2}^{1 + epsilon:.2f} > 1"
        )
    res2 = deterministic_mt(inst2, epsilon, config=cfg.lll)
    chi2 = [_color_of(u, c2, r2) for u in res2.assignment]

    colors = [chi1[v] * c2 + chi2[v] for v in range(graph.n)]
    classes = c1 * c2
    if not domatic_coverage_ok(graph, colors, classes):
        raise RuntimeError("domatic partition failed its coverage check")
    return DomaticResult(colors, classes, c1, c2, True, "", p1, p2)


# --- files -----------------------------------------------------------------------------


def load_hypergraph(path: str) -> Hypergraph:
    with open(path) as fh:
        lines = fh.read().splitlines()
    try:
        n, m, d = map(int, lines[0].split())
    except (IndexError, ValueError):
        raise ValueError(f"{path}:1: expected header 'n m d'") from None
    edges = []
    for ln in range(1, m + 1):
        if ln >= len(lines):
            raise ValueError(f"{path}: expected {m} edge lines")
        parts = lines[ln].split()
        if len(parts) != d:
            raise ValueError(f"{path}:{ln + 1}: expected {d} vertices")
        edges.append([int(tok) - 1 for tok in parts])
    return Hypergraph.make(n, edges)


def save_hypergraph(hg: Hypergraph, path: str):
    with open(path, "w") as fh:
        fh.write(f"{hg.n} {hg.m} {hg.d}\n")
        for e in hg.edges:
            fh.write(" ".join(str(v + 1) for v in e) + "\n")


def load_graph(path: str) -> Graph:
    with open(path) as fh:
        lines = fh.read().splitlines()
    try:
        n, m = map(int, lines[0].split())
    except (IndexError, ValueError):
        raise ValueError(f"{path}:1: expected header 'n m'") from None
    edges = []
    for ln in range(1, m + 1):
        if ln >= len(lines):
            raise ValueError(f"{path}: expected {m} edge lines")
        parts = lines[ln].split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{ln + 1}: expected 'u v'")
        edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    return Graph.make(n, edges)


def save_graph(graph: Graph, path: str):
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {graph.m}\n")
        for u, v in graph.edges:
            fh.write(f"{u + 1} {v + 1}\n")


def save_coloring(colors: Sequence[int], verification: dict, path: str):
    with open(path, "w") as fh:
        json.dump({"colors": list(colors), "verification": verification}, fh, indent=1)
        fh.write("\n")


def load_coloring(path: str) -> tuple[list[int], dict]:
    with open(path) as fh:
        obj = json.load(fh)
    return [int(c) for c in obj["colors"]], dict(obj.get("verification", {}))
