import itertools
import random
from fractions import Fraction

import pytest

from derand.juntas import TableOracle
from derand.lll import (
    BadEvent,
    ClauseOracle,
    LLLBudgetError,
    LLLConditionError,
    LLLInstance,
    ResamplingTable,
    TableExhausted,
    ThresholdOracle,
    WitnessTree,
    build_slices,
    check_wtl_empirical,
    compatible,
    deterministic_mt,
    enumerate_witness_trees,
    extract_witness_tree,
    load_lll_instance,
    mt_randomized,
    potential_S,
    save_lll_instance,
    tree_system,
)


def clause_event(b, variables, values, p_bound=None):
    oracle = ClauseOracle(b, values)
    p = oracle.expectation([None] * (len(variables) * b)) if p_bound is None else Fraction(p_bound)
    return BadEvent(tuple(variables), oracle, p, kind="clause", payload={"values": list(values)})


def mono_edge_event(variables):
    """4-or-k-uniform monochromatic edge over bits: all equal."""
    w = len(variables)
    values = [1 if idx in (0, (1 << w) - 1) else 0 for idx in range(1 << w)]
    oracle = TableOracle(1, values)
    return BadEvent(
        tuple(variables), oracle, Fraction(2, 1 << w),
        kind="table", payload={"values": values},
    )


# --- event oracles ---

def test_clause_oracle_probability():
    oracle = ClauseOracle(2, [3, 0])
    assert oracle.expectation([None] * 4) == Fraction(1, 16)
    assert oracle.expectation([1, None, 0, 0]) == Fraction(1, 2)
    assert oracle.expectation([0, None, None, None]) == 0
    assert oracle.evaluate([3, 0]) == 1
    assert oracle.evaluate([3, 1]) == 0


def test_threshold_oracle_matches_enumeration():
    rng = random.Random(0)
    for _ in range(25):
        w = rng.randint(1, 4)
        b = rng.randint(1, 2)
        targets = [rng.randrange(1 << b) for _ in range(w)]
        thr = rng.randint(0, w + 1)
        direction = rng.choice(["ge", "le"])
        oracle = ThresholdOracle(b, targets, thr, direction)
        local = tuple(rng.choice([0, 1, None]) for _ in range(w * b))
        unknown = [t for t, e in enumerate(local) if e is None]
        total = Fraction(0)
        for mask in range(1 << len(unknown)):
            bits = list(local)
            for t, pos in enumerate(unknown):
                bits[pos] = (mask >> t) & 1
            vals = [
                sum(bits[t * b + j] << (b - 1 - j) for j in range(b)) for t in range(w)
            ]
            total += oracle.evaluate(vals)
        assert oracle.expectation(local) == total / (1 << len(unknown))


# --- mt_randomized ---

def test_mt_no_events():
    inst = LLLInstance(3, 1, ())
    table = ResamplingTable.make([[1], [0], [1]], 1)
    result = mt_randomized(inst, table)
    assert result.assignment == (1, 0, 1)
    assert result.log == ()


def test_mt_single_resample():
    inst = LLLInstance(1, 1, (clause_event(1, [0], [0]),))
    table = ResamplingTable.make([[0, 1]], 1)
    result = mt_randomized(inst, table)
    assert result.assignment == (1,)
    assert result.log == (0,)


def test_mt_table_exhaustion():
    inst = LLLInstance(1, 1, (clause_event(1, [0], [0]),))
    table = ResamplingTable.make([[0, 0]], 1)
    with pytest.raises(TableExhausted):
        mt_randomized(inst, table)


def test_mt_statistical_termination():
    # sparse 3-uniform 2-coloring instance, 100 random tables
    edges = [(0, 1, 2), (2, 3, 4), (4, 5, 6), (6, 7, 8), (1, 5, 7)]
    inst = LLLInstance(9, 1, tuple(mono_edge_event(e) for e in edges))
    rng = random.Random(42)
    for _ in range(100):
        j = 8
        while True:
            table = ResamplingTable.random(9, j, 1, rng)
            try:
                result = mt_randomized(inst, table)
                break
            except TableExhausted:
                j *= 2
        for e in edges:
            colors = {result.assignment[v] for v in e}
            assert len(colors) > 1


# --- slices ---

def ev_on(vars_):
    return clause_event(1, vars_, [0] * len(vars_))


def test_slices_single_node():
    inst = LLLInstance(4, 1, (ev_on([1, 3]),))
    tree = WitnessTree((0,), (-1,))
    slices = build_slices(tree, inst)
    assert slices == (((1, 1), (3, 1)),)


def test_slices_two_nodes():
    # root on {1,2}, child on {2,3}: child reads first occurrences, the root
    # reads occurrence 2 of the shared variable
    inst = LLLInstance(4, 1, (ev_on([1, 2]), ev_on([2, 3])))
    tree = WitnessTree((0, 1), (-1, 0))
    slices = build_slices(tree, inst)
    assert slices[1] == ((2, 1), (3, 1))
    assert slices[0] == ((1, 1), (2, 2))


def test_slices_disjoint_on_paths():
    inst = LLLInstance(3, 1, (ev_on([0, 1]), ev_on([1, 2])))
    tree = WitnessTree((0, 1, 0), (-1, 0, 1))
    slices = build_slices(tree, inst)
    cells = [c for sl in slices for c in sl]
    assert len(cells) == len(set(cells))
    assert all(len(sl) == 2 for sl in slices)


def test_slices_reject_unrelated_child():
    inst = LLLInstance(4, 1, (ev_on([0]), ev_on([3])))
    tree = WitnessTree((0, 1), (-1, 0))
    with pytest.raises(ValueError, match="affect"):
        build_slices(tree, inst)


# --- compatible ---

def test_compatible_single_node():
    inst = LLLInstance(1, 1, (ev_on([0]),))
    tree = WitnessTree((0,), (-1,))
    assert compatible(tree, ResamplingTable.make([[0, 1]], 1), inst)
    assert not compatible(tree, ResamplingTable.make([[1, 0]], 1), inst)


def test_compatible_is_per_node_conjunction():
    inst = LLLInstance(2, 1, (ev_on([0]), ev_on([0, 1])))
    tree = WitnessTree((1, 0), (-1, 0))
    # child [x0=0] reads (0,1); root [x0=0, x1=0] reads (0,2) and (1,1)
    for r00, r01, r10 in itertools.product([0, 1], repeat=3):
        table = ResamplingTable.make([[r00, r01], [r10, 0]], 1)
        expect = r00 == 0 and r01 == 0 and r10 == 0
        assert compatible(tree, table, inst) == expect


# --- enumeration ---

def test_enumerate_single_event_paths():
    inst = LLLInstance(2, 1, (ev_on([0, 1]),))
    trees = enumerate_witness_trees(inst, 3)
    assert len(trees) == 3
    assert sorted(t.size for t in trees) == [1, 2, 3]
    for t in trees:
        # an event conflicts with itself, so only path shapes are proper
        assert all(p == v - 1 for v, p in enumerate(t.parents) if v)


def test_enumerate_disjoint_events():
    inst = LLLInstance(4, 1, (ev_on([0, 1]), ev_on([2, 3])))
    trees = enumerate_witness_trees(inst, 1)
    assert len(trees) == 2
    assert all(t.size == 1 for t in trees)


def test_enumerate_weights_are_products():
    inst = LLLInstance(2, 1, (ev_on([0]), ev_on([0, 1])))
    for tree in enumerate_witness_trees(inst, 3):
        expect = Fraction(1)
        for lab in tree.labels:
            expect *= inst.events[lab].p_bound
        assert tree.weight(inst) == expect


def test_enumerate_same_depth_dependents_excluded():
    # two dependent events can never sit at the same depth
    inst = LLLInstance(3, 1, (ev_on([0, 1]), ev_on([1, 2])))
    for tree in enumerate_witness_trees(inst, 3):
        depths = tree.depths()
        for a in range(tree.size):
            for b in range(a + 1, tree.size):
                if depths[a] == depths[b]:
                    sup_a = set(inst.events[tree.labels[a]].support)
                    sup_b = set(inst.events[tree.labels[b]].support)
                    assert not (sup_a & sup_b)


def test_enumerate_budget():
    inst = LLLInstance(2, 1, (ev_on([0, 1]),))
    with pytest.raises(LLLBudgetError):
        enumerate_witness_trees(inst, 10, budget=5)


# --- potential ---

def test_potential_no_compatible_trees():
    inst = LLLInstance(1, 1, (ev_on([0]),))
    trees = enumerate_witness_trees(inst, 2)
    table = ResamplingTable.make([[1, 1]], 1)
    assert potential_S(inst, trees, table, 2, 1) == 0


def test_potential_formula():
    inst = LLLInstance(2, 1, (ev_on([0]), ev_on([1])))
    trees = [t for t in enumerate_witness_trees(inst, 2) if t.size == 1]
    # only event 0 compatible on column 1; use C=2, m=2 -> 1/4
    table = ResamplingTable.make([[0, 1], [1, 1]], 1)
    assert potential_S(inst, trees, table, 2, 2) == Fraction(1, 4)


def test_potential_expectation_matches_weights():
    # exact-probability events: E[S] over all tables equals the weight sums
    inst = LLLInstance(2, 1, (ev_on([0, 1]),))
    k, c_scale = 2, 3
    trees = enumerate_witness_trees(inst, k)
    j = k
    total = Fraction(0)
    tables = 0
    for bits in itertools.product([0, 1], repeat=2 * j):
        rows = [bits[:j], bits[j:]]
        table = ResamplingTable.make(rows, 1)
        total += potential_S(inst, trees, table, k, c_scale)
        tables += 1
    mean = total / tables
    expect = sum((t.weight(inst) for t in trees), Fraction(0)) / (c_scale * inst.m)
    expect += sum((t.weight(inst) for t in trees if t.size == k), Fraction(0))
    assert mean == expect


def test_tree_system_oracle_consistency():
    # the tree-system PEO at a fully known pattern equals direct compatibility
    inst = LLLInstance(2, 1, (ev_on([0, 1]), ev_on([1])))
    k = 2
    trees = enumerate_witness_trees(inst, k)
    system = tree_system(inst, trees, k, k, 1)
    for bits in itertools.product([0, 1], repeat=2 * k):
        rows = [bits[:k], bits[k:]]
        table = ResamplingTable.make(rows, 1)
        cells = [bits[i * k + col] for i in range(2) for col in range(k)]
        direct = potential_S(inst, trees, table, k, 1)
        via_system = sum(
            f.weight * f.oracle.evaluate([cells[i] for i in f.support])
            for f in system.funcs
        )
        assert via_system == direct


# --- extraction invariants ---

def test_extracted_trees_distinct_and_compatible():
    edges = [(0, 1, 2), (1, 2, 3), (3, 4, 5)]
    inst = LLLInstance(6, 1, tuple(mono_edge_event(e) for e in edges))
    rng = random.Random(7)
    runs = 0
    for _ in range(60):
        j = 8
        while True:
            table = ResamplingTable.random(6, j, 1, rng)
            try:
                result = mt_randomized(inst, table)
                break
            except TableExhausted:
                j *= 2
        keys = set()
        for t in range(len(result.log)):
            tree = extract_witness_tree(inst, result.log, t)
            key = tree.canonical_key()
            assert key not in keys
            keys.add(key)
            assert compatible(tree, table, inst)
        runs += len(result.log)
    assert runs > 0  # the statistic exercised some resamplings


# --- deterministic_mt ---

def test_deterministic_single_event():
    inst = LLLInstance(2, 1, (clause_event(1, [0, 1], [0, 0]),))
    result = deterministic_mt(inst, epsilon=1.0)
    ev = inst.events[0]
    assert ev.oracle.evaluate([result.assignment[i] for i in ev.support]) == 0
    assert result.potential < 1


def test_deterministic_no_events():
    inst = LLLInstance(3, 1, ())
    result = deterministic_mt(inst, epsilon=1.0)
    assert result.assignment == (0, 0, 0)


def test_deterministic_hypergraph_coloring():
    # 4-uniform edges, each meeting at most one other: p = 1/8, d = 2,
    # and e * (1/8) * 2^(1+epsilon) <= 1 at epsilon = 1/2
    edges = [(0, 1, 2, 3), (3, 4, 5, 6), (7, 8, 9, 10), (10, 11, 12, 13)]
    inst = LLLInstance(14, 1, tuple(mono_edge_event(e) for e in edges))
    result = deterministic_mt(inst, epsilon=0.5)
    for e in edges:
        colors = {result.assignment[v] for v in e}
        assert len(colors) > 1
    assert result.resamples <= result.c_scale * inst.m
    assert result.potential < 1


def test_deterministic_rejects_violated_condition():
    # p = 1/2 with any dependency breaks e*p*d^(1+eps) <= 1
    inst = LLLInstance(1, 1, (clause_event(1, [0], [0]),))
    with pytest.raises(LLLConditionError):
        deterministic_mt(inst, epsilon=1.0)


def test_deterministic_multibit():
    # b = 2 pair events, p = 1/16, d = 2: e * (1/16) * 2^2 <= 1
    events = tuple(clause_event(2, [i, i + 1], [0, 0]) for i in range(2))
    inst = LLLInstance(3, 2, events)
    result = deterministic_mt(inst, epsilon=1.0)
    for ev in inst.events:
        assert ev.oracle.evaluate([result.assignment[i] for i in ev.support]) == 0


# --- empirical WTL ---

def test_wtl_single_node_frequency():
    inst = LLLInstance(2, 1, (clause_event(1, [0, 1], [0, 0]),))
    tree = WitnessTree((0,), (-1,))
    report = check_wtl_empirical(inst, tree, trials=2000, rng=random.Random(3))
    assert report.weight_bound == Fraction(1, 4)
    assert not report.violated


def test_wtl_improper_tree_never_appears():
    inst = LLLInstance(4, 1, (ev_on([0, 1]), ev_on([2, 3])))
    tree = WitnessTree((0, 1), (-1, 0))  # disjoint child can never attach
    report = check_wtl_empirical(inst, tree, trials=300, rng=random.Random(4))
    assert report.appearances == 0


# --- files ---

def test_instance_roundtrip(tmp_path):
    inst = LLLInstance(
        3, 2,
        (
            BadEvent((0, 1), ClauseOracle(2, [1, 2]), Fraction(1, 16),
                     kind="clause", payload={"values": [1, 2]}),
            BadEvent((1, 2), ThresholdOracle(2, [0, 0], 2), Fraction(1, 16),
                     kind="threshold", payload={"targets": [0, 0], "threshold": 2}),
        ),
    )
    path = tmp_path / "inst.json"
    save_lll_instance(inst, str(path))
    loaded = load_lll_instance(str(path))
    assert loaded.n == 3 and loaded.b == 2
    assert loaded.events[0].p_bound == Fraction(1, 16)
    assert isinstance(loaded.events[1].oracle, ThresholdOracle)


def test_instance_validate_rejects_bad_bound(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"n": 1, "b": 1, "events": [{"vars": [0], "kind": "clause",'
        ' "payload": {"values": [0]}, "p_bound": "1/8"}]}'
    )
    with pytest.raises(ValueError, match="below exact"):
        load_lll_instance(str(path))


def test_instance_default_bound_is_exact(tmp_path):
    path = tmp_path / "auto.json"
    path.write_text(
        '{"n": 2, "b": 1, "events": [{"vars": [0, 1], "kind": "clause",'
        ' "payload": {"values": [0, 1]}}]}'
    )
    inst = load_lll_instance(str(path))
    assert inst.events[0].p_bound == Fraction(1, 4)
