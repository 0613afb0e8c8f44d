"""Moser-Tardos machinery: the randomized resampling algorithm driven by a
fixed table, witness trees with per-node slices, and a deterministic solver
that searches for a good table by conditional expectations.

A resampling table R(i, col) pre-draws values of M_b per variable; the
algorithm starts from column 1 and advances a variable's column on each
resample, so a fixed table makes the run deterministic.  Witness trees
certify possible resampling histories; a tree's slices pick the table cells
its events read, and a tree is compatible with a table when every node's
event fires on its slice.  The deterministic solver enumerates all proper
trees up to a size cutoff, then minimizes a weighted compatibility count over
tables so that no cutoff-size tree stays compatible and few smaller ones do.

Instance files are JSON with 0-based variable indices:
  {"n": int, "b": int, "events": [{"vars": [...], "kind": "clause"|
   "threshold"|"table"|"robp", "payload": ..., "p_bound": rational?}]}
A clause payload {"values": [...]} fires when every listed variable equals
its value.  A threshold payload {"targets": [...], "threshold": t,
"direction": "ge"|"le"} fires when the number of matched targets reaches
(or, for "le", stays under) the threshold.  Missing p_bound entries are
filled with the exact probability from the event's oracle.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from derand.gf2 import DimensionError
from derand.juntas import (
    Bit,
    FuncOracle,
    Junta,
    JuntaSystem,
    OptimizerConfig,
    OracleKind,
    ROBP,
    ROBPOracle,
    TableOracle,
    optimize_graded,
    parse_rational,
    rational_text,
)

__all__ = [
    "BadEvent",
    "LLLInstance",
    "ResamplingTable",
    "WitnessTree",
    "MTResult",
    "DeterministicMTResult",
    "WTLReport",
    "LLLConfig",
    "LLLConditionError",
    "LLLBudgetError",
    "TableExhausted",
    "ClauseOracle",
    "ThresholdOracle",
    "mt_randomized",
    "build_slices",
    "compatible",
    "enumerate_witness_trees",
    "extract_witness_tree",
    "potential_S",
    "tree_system",
    "deterministic_mt",
    "check_wtl_empirical",
    "load_lll_instance",
    "save_lll_instance",
]


class LLLConditionError(RuntimeError):
    def __init__(self, p: Fraction, d: int, epsilon: float):
        super().__init__(
            f"symmetric condition fails: e * {float(p):.3g} * {d}^(1+{epsilon:g}) > 1"
        )
        self.p, self.d, self.epsilon = p, d, epsilon


class LLLBudgetError(RuntimeError):
    def __init__(self, message: str, partial_count: int = 0):
        super().__init__(message)
        self.partial_count = partial_count


class TableExhausted(RuntimeError):
    """A resample needed a column beyond the table's last one."""


# --- event oracles ---------------------------------------------------------------


def _value_match_prob(bits: Sequence[Bit], value: int, b: int) -> Fraction:
    """P(variable == value) given its known bits; each unknown bit a fair coin."""
    num, den = 1, 1
    for j in range(b):
        want = (value >> (b - 1 - j)) & 1
        have = bits[j]
        if have is None:
            den <<= 1
        elif have != want:
            return Fraction(0)
    return Fraction(num, den)


class ClauseOracle(FuncOracle):
    """Indicator that every support variable equals its clause value."""

    oracle_kind = OracleKind.PLAIN_PEO

    def __init__(self, b: int, values: Sequence[int]):
        self.b = b
        self.values = tuple(int(v) for v in values)
        for v in self.values:
            if not 0 <= v < (1 << b):
                raise ValueError(f"clause value {v} outside M_{b}")

    @property
    def w(self) -> int:
        return len(self.values)

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        p = Fraction(1)
        for t, v in enumerate(self.values):
            p *= _value_match_prob(local[t * self.b : (t + 1) * self.b], v, self.b)
            if p == 0:
                break
        return p

    def evaluate(self, values: Sequence[int]) -> Fraction:
        return Fraction(1 if tuple(values) == self.values else 0)


class ThresholdOracle(FuncOracle):
    """Indicator that the number of matched per-variable targets reaches (ge)
    or stays at most (le) the threshold; exact via the count distribution."""

    oracle_kind = OracleKind.PLAIN_PEO

    def __init__(self, b: int, targets: Sequence[int], threshold: int, direction: str = "ge"):
        if direction not in ("ge", "le"):
            raise ValueError(f"unknown direction {direction!r}")
        self.b = b
        self.targets = tuple(int(v) for v in targets)
        self.threshold = threshold
        self.direction = direction

    @property
    def w(self) -> int:
        return len(self.targets)

    def _tail(self, qs: Sequence[Fraction]) -> Fraction:
        dist = [Fraction(1)]
        for q in qs:
            nxt = [Fraction(0)] * (len(dist) + 1)
            for c, p in enumerate(dist):
                if p:
                    nxt[c] += p * (1 - q)
                    nxt[c + 1] += p * q
            dist = nxt
        if self.direction == "ge":
            return sum(dist[max(0, self.threshold) :], Fraction(0))
        return sum(dist[: self.threshold + 1], Fraction(0)) if self.threshold >= 0 else Fraction(0)

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        qs = [
            _value_match_prob(local[t * self.b : (t + 1) * self.b], v, self.b)
            for t, v in enumerate(self.targets)
        ]
        return self._tail(qs)

    def evaluate(self, values: Sequence[int]) -> Fraction:
        count = sum(1 for v, tgt in zip(values, self.targets) if v == tgt)
        if self.direction == "ge":
            return Fraction(1 if count >= self.threshold else 0)
        return Fraction(1 if count <= self.threshold else 0)


# --- instances --------------------------------------------------------------------


@dataclass(frozen=True)
class BadEvent:
    support: tuple[int, ...]
    oracle: FuncOracle
    p_bound: Fraction
    kind: str = "custom"
    payload: dict | None = None
    name: str = ""

    def __post_init__(self):
        if list(self.support) != sorted(set(self.support)):
            raise DimensionError("event support must be sorted and duplicate-free")


@dataclass(frozen=True)
class LLLInstance:
    """Bad events over n variables of M_b; events affect each other when their
    supports intersect."""

    n: int
    b: int
    events: tuple[BadEvent, ...]

    def __post_init__(self):
        for ev in self.events:
            if ev.support and ev.support[-1] >= self.n:
                raise DimensionError("event support outside variable range")

    @property
    def m(self) -> int:
        return len(self.events)

    def neighbors(self) -> list[list[int]]:
        """Dependency lists, self included."""
        var_events: dict[int, list[int]] = {}
        for idx, ev in enumerate(self.events):
            for i in ev.support:
                var_events.setdefault(i, []).append(idx)
        out = []
        for idx, ev in enumerate(self.events):
            seen = {idx}
            for i in ev.support:
                seen.update(var_events[i])
            out.append(sorted(seen))
        return out

    def dependency_degree(self) -> int:
        return max((len(nb) for nb in self.neighbors()), default=0)

    def max_p(self) -> Fraction:
        return max((ev.p_bound for ev in self.events), default=Fraction(0))

    def validate(self, exhaustive_bit_limit: int = 16):
        """Check declared bounds against exact event probabilities (PEO at the
        all-unknown pattern) for events small enough to trust exactly."""
        for idx, ev in enumerate(self.events):
            if len(ev.support) * self.b <= exhaustive_bit_limit:
                exact = ev.oracle.expectation([None] * (len(ev.support) * self.b))
                if ev.p_bound < exact:
                    raise ValueError(
                        f"event {idx}: declared bound {ev.p_bound} below exact {exact}"
                    )


@dataclass(frozen=True)
class ResamplingTable:
    """n rows by J columns of values in M_b; reads past column J are an error."""

    n: int
    b: int
    columns: int
    values: tuple[tuple[int, ...], ...]  # values[i][col-1]

    @classmethod
    def make(cls, values: Sequence[Sequence[int]], b: int) -> "ResamplingTable":
        rows = tuple(tuple(int(v) for v in row) for row in values)
        if not rows or not rows[0]:
            raise DimensionError("table needs at least one row and one column")
        cols = len(rows[0])
        for row in rows:
            if len(row) != cols:
                raise DimensionError("ragged resampling table")
            for v in row:
                if not 0 <= v < (1 << b):
                    raise ValueError(f"table value {v} outside M_{b}")
        return cls(len(rows), b, cols, rows)

    @classmethod
    def random(cls, n: int, columns: int, b: int, rng: random.Random) -> "ResamplingTable":
        return cls.make(
            [[rng.randrange(1 << b) for _ in range(columns)] for _ in range(n)], b
        )

    def get(self, i: int, col: int) -> int:
        """col is 1-based, matching slice occurrence indices."""
        if not 1 <= col <= self.columns:
            raise TableExhausted(f"column {col} beyond table width {self.columns}")
        return self.values[i][col - 1]


@dataclass(frozen=True)
class MTResult:
    assignment: tuple[int, ...]
    log: tuple[int, ...]  # resampled event indices in order


def mt_randomized(inst: LLLInstance, table: ResamplingTable) -> MTResult:
    """Run the resampling algorithm reading values from the table, always
    selecting the lowest-index true bad event; raises TableExhausted when a
    variable runs out of columns."""
    if table.n != inst.n or table.b != inst.b:
        raise DimensionError("table shape differs from the instance")
    x = [table.get(i, 1) for i in range(inst.n)]
    next_col = [2] * inst.n
    log: list[int] = []
    while True:
        hit = None
        for idx, ev in enumerate(inst.events):
            if ev.oracle.evaluate([x[i] for i in ev.support]) == 1:
                hit = idx
                break
        if hit is None:
            return MTResult(tuple(x), tuple(log))
        log.append(hit)
        for i in inst.events[hit].support:
            x[i] = table.get(i, next_col[i])
            next_col[i] += 1


# --- witness trees -----------------------------------------------------------------


@dataclass(frozen=True)
class WitnessTree:
    """Rooted tree of event labels; node 0 is the root, parents precede children."""

    labels: tuple[int, ...]
    parents: tuple[int, ...]  # -1 for the root

    def __post_init__(self):
        if not self.labels or self.parents[0] != -1:
            raise ValueError("node 0 must be the root")
        for v in range(1, len(self.labels)):
            if not 0 <= self.parents[v] < v:
                raise ValueError("parents must precede children")

    @property
    def size(self) -> int:
        return len(self.labels)

    def depths(self) -> list[int]:
        out = [0] * self.size
        for v in range(1, self.size):
            out[v] = out[self.parents[v]] + 1
        return out

    def canonical_key(self):
        children: list[list[int]] = [[] for _ in range(self.size)]
        for v in range(1, self.size):
            children[self.parents[v]].append(v)

        def key(v):
            return (self.labels[v], tuple(sorted(key(c) for c in children[v])))

        return key(0)

    def weight(self, inst: LLLInstance) -> Fraction:
        w = Fraction(1)
        for lab in self.labels:
            w *= inst.events[lab].p_bound
        return w


def build_slices(
    tree: WitnessTree, inst: LLLInstance
) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Per-node slices: node v reads (i, u+1) where u counts strictly deeper
    nodes whose label's support contains i.  Checks the child-parent
    dependency constraint, pairwise disjointness, and slice sizes."""
    depths = tree.depths()
    supports = [inst.events[lab].support for lab in tree.labels]
    for v in range(1, tree.size):
        pv = tree.parents[v]
        if not set(supports[v]) & set(supports[pv]):
            raise ValueError(f"node {v} label does not affect its parent's label")
    slices = []
    for v in range(tree.size):
        cells = []
        for i in supports[v]:
            u = sum(
                1
                for v2 in range(tree.size)
                if depths[v2] > depths[v] and i in supports[v2]
            )
            cells.append((i, u + 1))
        slices.append(tuple(cells))
        if len(cells) != len(supports[v]):
            raise RuntimeError("slice size differs from support size")
    seen: set[tuple[int, int]] = set()
    for sl in slices:
        for cell in sl:
            if cell in seen:
                raise ValueError("slices of distinct nodes intersect")
            seen.add(cell)
    return tuple(slices)


def compatible(tree: WitnessTree, table: ResamplingTable, inst: LLLInstance) -> bool:
    """True iff every node's event fires on its slice projection of the table."""
    slices = build_slices(tree, inst)
    for v, sl in enumerate(slices):
        vals = [table.get(i, occ) for i, occ in sl]  # slices are var-ascending
        if inst.events[tree.labels[v]].oracle.evaluate(vals) != 1:
            return False
    return True


def enumerate_witness_trees(
    inst: LLLInstance, max_size: int, budget: int = 200_000
) -> list[WitnessTree]:
    """All proper witness trees of size at most max_size, each emitted once.

    Proper means every non-root label affects its parent's label and no two
    same-depth nodes carry labels sharing a variable (the deepest-placement
    rule forbids that under any tie-break).  Grown by attaching one leaf at a
    time with canonical-form deduplication."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    supports = [set(ev.support) for ev in inst.events]
    dependent = [
        [bool(supports[a] & supports[b]) for b in range(inst.m)] for a in range(inst.m)
    ]
    seen: set = set()
    out: list[WitnessTree] = []
    frontier: list[WitnessTree] = []
    for lab in range(inst.m):
        tree = WitnessTree((lab,), (-1,))
        seen.add(tree.canonical_key())
        out.append(tree)
        frontier.append(tree)
    size = 1
    while size < max_size and frontier:
        nxt: list[WitnessTree] = []
        for tree in frontier:
            depths = tree.depths()
            for parent in range(tree.size):
                child_depth = depths[parent] + 1
                peers = [v for v in range(tree.size) if depths[v] == child_depth]
                for lab in range(inst.m):
                    if not dependent[lab][tree.labels[parent]]:
                        continue
                    if any(dependent[lab][tree.labels[v]] for v in peers):
                        continue
                    grown = WitnessTree(tree.labels + (lab,), tree.parents + (parent,))
                    key = grown.canonical_key()
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(grown)
                    nxt.append(grown)
                    if len(out) > budget:
                        raise LLLBudgetError(
                            f"tree budget {budget} exceeded at size {size + 1}",
                            partial_count=len(out),
                        )
        frontier = nxt
        size += 1
    return out


def extract_witness_tree(inst: LLLInstance, log: Sequence[int], t: int) -> WitnessTree:
    """Witness tree of the resampling at log position t: scan backwards, each
    event attaching as a child of a deepest node its label affects (earliest
    inserted among the deepest)."""
    supports = [set(ev.support) for ev in inst.events]
    labels = [log[t]]
    parents = [-1]
    depths = [0]
    for s in range(t - 1, -1, -1):
        lab = log[s]
        best = -1
        best_depth = -1
        for v in range(len(labels)):
            if supports[lab] & supports[labels[v]] and depths[v] > best_depth:
                best, best_depth = v, depths[v]
        if best >= 0:
            labels.append(lab)
            parents.append(best)
            depths.append(best_depth + 1)
    return WitnessTree(tuple(labels), tuple(parents))


# --- the table potential and its junta system ---------------------------------------


def potential_S(
    inst: LLLInstance,
    trees: Sequence[WitnessTree],
    table: ResamplingTable,
    max_size: int,
    c_scale: int,
) -> Fraction:
    """S(R) = (1/(C m)) * #compatible trees + #compatible trees of the cutoff size."""
    total = Fraction(0)
    unit = Fraction(1, c_scale * max(1, inst.m))
    for tree in trees:
        if compatible(tree, table, inst):
            total += unit
            if tree.size == max_size:
                total += 1
    return total


class _TreeOracle(FuncOracle):
    """Graded PEO for one tree's compatibility indicator: the product of the
    per-node event probabilities on the tree's disjoint slices."""

    oracle_kind = OracleKind.GRADED_PEO

    def __init__(self, inst: LLLInstance, tree: WitnessTree, columns: int):
        self.b = inst.b
        slices = build_slices(tree, inst)
        cells = sorted({cell for sl in slices for cell in sl})
        self.cells = cells  # (var, occ), ascending; support order of the junta
        cell_slot = {cell: t for t, cell in enumerate(cells)}
        self.node_oracles = [inst.events[lab].oracle for lab in tree.labels]
        # node -> local slots of its slice cells, in the event's support order
        self.node_slots = [
            [cell_slot[cell] for cell in sl] for sl in slices
        ]

    def expectation(self, local: Sequence[Bit]) -> Fraction:
        b = self.b
        p = Fraction(1)
        for oracle, slots in zip(self.node_oracles, self.node_slots):
            node_local: list[Bit] = []
            for slot in slots:
                node_local.extend(local[slot * b : (slot + 1) * b])
            p *= oracle.expectation(node_local)
            if p == 0:
                break
        return p

    def evaluate(self, values: Sequence[int]) -> Fraction:
        for oracle, slots in zip(self.node_oracles, self.node_slots):
            if oracle.evaluate([values[slot] for slot in slots]) != 1:
                return Fraction(0)
        return Fraction(1)

    def table_over(self, local: Sequence[Bit], free: Sequence[int]) -> list[Fraction]:
        b = self.b
        owner = {}
        for node, slots in enumerate(self.node_slots):
            for pos_in_node, slot in enumerate(slots):
                for j in range(b):
                    owner[slot * b + j] = (node, pos_in_node * b + j)
        per_node: dict[int, list[tuple[int, int]]] = {}
        for t, pos in enumerate(free):
            node, npos = owner[pos]
            per_node.setdefault(node, []).append((t, npos))
        tables = {}
        for node, oracle in enumerate(self.node_oracles):
            slots = self.node_slots[node]
            base: list[Bit] = []
            for slot in slots:
                base.extend(local[slot * b : (slot + 1) * b])
            pairs = per_node.get(node, [])
            tables[node] = (
                [t for t, _ in pairs],
                oracle.table_over(base, [npos for _, npos in pairs]),
            )
        out = []
        for idx in range(1 << len(free)):
            p = Fraction(1)
            for node in range(len(self.node_oracles)):
                slots_t, tab = tables[node]
                sub = 0
                for local_bit, t in enumerate(slots_t):
                    sub |= ((idx >> t) & 1) << local_bit
                p *= tab[sub]
                if p == 0:
                    break
            out.append(p)
        return out


def tree_system(
    inst: LLLInstance,
    trees: Sequence[WitnessTree],
    columns: int,
    max_size: int,
    c_scale: int,
    negate: bool = False,
) -> JuntaSystem:
    """The potential S as a junta system over table cells (cell (i, col) is
    variable i*columns + col - 1 of M_b); negate flips weights so the graded
    maximizer minimizes S."""
    sign = -1 if negate else 1
    unit = Fraction(1, c_scale * max(1, inst.m))
    funcs = []
    for tree in trees:
        oracle = _TreeOracle(inst, tree, columns)
        support = tuple(i * columns + (occ - 1) for i, occ in oracle.cells)
        weight = unit + (1 if tree.size == max_size else 0)
        funcs.append(Junta(support, oracle, sign * weight))
    return JuntaSystem(inst.n * columns, inst.b, tuple(funcs))


# --- the deterministic solver ---------------------------------------------------------


@dataclass(frozen=True)
class LLLConfig:
    c: float = 1.0                    # multiplier in the tree-size cutoff schedule
    max_tree_size: int = 4
    tree_budget: int = 200_000
    run_escalations: int = 2
    force: bool = False               # skip the symmetric-condition check
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass
class DeterministicMTResult:
    assignment: tuple[int, ...]
    table: ResamplingTable
    cutoff: int                       # tree-size cutoff K
    c_scale: int                      # C in the potential
    tree_count: int
    potential: Fraction               # S(R) of the chosen table
    resamples: int
    epsilon: float
    p: Fraction
    d: int


def _default_cutoff(inst: LLLInstance, epsilon: float, cfg: LLLConfig) -> int:
    d = max(2, inst.dependency_degree())
    mn = max(2, inst.m * max(1, inst.n))
    k = cfg.c * math.log(mn / min(1.0, max(epsilon, 1e-9))) / (epsilon * math.log(d))
    return max(1, min(cfg.max_tree_size, math.ceil(k)))


def deterministic_mt(
    inst: LLLInstance, epsilon: float, cutoff: int | None = None,
    config: LLLConfig | None = None,
) -> DeterministicMTResult:
    """Deterministically find an assignment avoiding every bad event.

    Requires e * p * d^(1+epsilon) <= 1 for the declared bounds (unless
    forced).  Enumerates proper witness trees up to a cutoff chosen so the
    cutoff-size layer has weight under 1/2, scales the compatibility potential
    so its expectation stays under 1, minimizes it over resampling tables by
    the graded optimizer, and replays the table; the replayed run must stop
    within C*m resamplings with no event true, which is re-verified.
    """
    cfg = config or LLLConfig()
    if inst.m == 0:
        table = ResamplingTable.make([[0]] * max(1, inst.n), inst.b) if inst.n else None
        assignment = tuple(0 for _ in range(inst.n))
        return DeterministicMTResult(
            assignment, table, 0, 1, 0, Fraction(0), 0, epsilon, Fraction(0), 0
        )
    p = inst.max_p()
    d = inst.dependency_degree()
    if not cfg.force and math.e * float(p) * d ** (1.0 + epsilon) > 1.0:
        raise LLLConditionError(p, d, epsilon)

    # the schedule formula only caps the search; the smallest cutoff whose
    # top layer weighs under 1/2 gives the same guarantee with far fewer trees
    k = cutoff if cutoff is not None else 1
    k_max = max(_default_cutoff(inst, epsilon, cfg), cfg.max_tree_size) + cfg.run_escalations
    while True:
        trees = enumerate_witness_trees(inst, k, cfg.tree_budget)
        tail = sum((t.weight(inst) for t in trees if t.size == k), Fraction(0))
        if tail >= Fraction(1, 2):
            if k >= k_max:
                raise LLLBudgetError(
                    f"cutoff-layer weight {tail} >= 1/2 at the size budget {k}"
                )
            k += 1
            continue
        total_w = sum((t.weight(inst) for t in trees), Fraction(0))
        c_scale = max(1, math.ceil(Fraction(2, inst.m) * total_w))
        columns = k
        system = tree_system(inst, trees, columns, k, c_scale, negate=True)
        y = optimize_graded(system, cfg.optimizer)
        rows = [
            [y[i * columns + col] for col in range(columns)] for i in range(inst.n)
        ]
        table = ResamplingTable.make(rows, inst.b)
        s_val = potential_S(inst, trees, table, k, c_scale)
        if s_val >= 1:
            raise RuntimeError(f"minimized potential {s_val} is not below 1")
        try:
            result = mt_randomized(inst, table)
            if len(result.log) <= c_scale * inst.m:
                return DeterministicMTResult(
                    result.assignment, table, k, c_scale, len(trees), s_val,
                    len(result.log), epsilon, p, d,
                )
        except TableExhausted:
            pass
        # the size-k truncation is heuristic for run length; grow and retry
        if k >= k_max:
            raise LLLBudgetError(f"replay exceeded its bound at cutoff {k}")
        k += 1


# --- empirical Witness Tree Lemma check -----------------------------------------------


@dataclass(frozen=True)
class WTLReport:
    trials: int
    appearances: int
    frequency: float
    weight_bound: Fraction
    slack: float
    violated: bool


def check_wtl_empirical(
    inst: LLLInstance, tree: WitnessTree, trials: int, rng: random.Random
) -> WTLReport:
    """Empirical appearance frequency of a witness tree over randomized runs,
    flagged only when it exceeds the weight bound by more than four binomial
    standard deviations."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    key = tree.canonical_key()
    appearances = 0
    columns = max(4, 2 * tree.size, 2 * inst.m)
    for _ in range(trials):
        j = columns
        while True:
            table = ResamplingTable.random(inst.n, j, inst.b, rng)
            try:
                run = mt_randomized(inst, table)
                break
            except TableExhausted:
                j *= 2
        for t in range(len(run.log)):
            if extract_witness_tree(inst, run.log, t).canonical_key() == key:
                appearances += 1
                break
    w = tree.weight(inst)
    freq = appearances / trials
    pw = min(1.0, float(w))
    slack = 4.0 * math.sqrt(max(pw * (1 - pw), 1e-12) / trials)
    return WTLReport(
        trials=trials,
        appearances=appearances,
        frequency=freq,
        weight_bound=w,
        slack=slack,
        violated=freq > float(w) + slack,
    )


# --- instance files ---------------------------------------------------------------------


def _event_from_json(obj: dict, b: int) -> BadEvent:
    support = tuple(sorted(int(v) for v in obj["vars"]))
    kind = obj["kind"]
    payload = obj.get("payload", {})
    order = {int(v): t for t, v in enumerate(obj["vars"])}
    perm = [order[i] for i in support]  # payload entries follow the listed order
    if kind == "clause":
        values = [int(payload["values"][t]) for t in perm]
        oracle: FuncOracle = ClauseOracle(b, values)
    elif kind == "threshold":
        targets = [int(payload["targets"][t]) for t in perm]
        oracle = ThresholdOracle(
            b, targets, int(payload["threshold"]), payload.get("direction", "ge")
        )
    elif kind == "table":
        oracle = TableOracle(b, payload["values"])
        if sorted(obj["vars"]) != list(obj["vars"]):
            raise ValueError("table events need their vars listed in sorted order")
        for v in oracle.values:
            if v not in (0, 1):
                raise ValueError("event tables must be 0/1 valued")
    elif kind == "robp":
        nodes = {
            str(nd["id"]): (int(nd["var"]), str(nd["lo"]), str(nd["hi"]))
            for nd in payload["nodes"]
        }
        sinks = {str(kk): parse_rational(v) for kk, v in payload["sinks"].items()}
        robp = ROBP(str(payload["start"]), nodes, sinks)
        oracle = ROBPOracle(b, robp, len(support))
        if sorted(obj["vars"]) != list(obj["vars"]):
            raise ValueError("robp events need their vars listed in sorted order")
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    if "p_bound" in obj:
        p_bound = parse_rational(obj["p_bound"])
    else:
        p_bound = oracle.expectation([None] * (len(support) * b))
    return BadEvent(support, oracle, p_bound, kind=kind, payload=payload,
                    name=str(obj.get("name", "")))


def load_lll_instance(path: str) -> LLLInstance:
    with open(path) as fh:
        obj = json.load(fh)
    n, b = int(obj["n"]), int(obj.get("b", 1))
    events = tuple(_event_from_json(ev, b) for ev in obj["events"])
    inst = LLLInstance(n, b, events)
    inst.validate()
    return inst


def save_lll_instance(inst: LLLInstance, path: str):
    events = []
    for ev in inst.events:
        if ev.kind == "custom" or ev.payload is None:
            raise ValueError("cannot serialize a custom in-memory event")
        events.append(
            {
                "vars": list(ev.support),
                "kind": ev.kind,
                "payload": ev.payload,
                "p_bound": rational_text(ev.p_bound),
                **({"name": ev.name} if ev.name else {}),
            }
        )
    with open(path, "w") as fh:
        json.dump({"n": inst.n, "b": inst.b, "events": events}, fh, indent=1)
        fh.write("\n")
