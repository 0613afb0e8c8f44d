import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from derand.codes import NeighborhoodFamily
from derand.gf2 import BitVec
from derand.juntas import (
    Junta,
    JuntaSystem,
    OptimizerConfig,
    OracleError,
    PartialAssignment,
    PartitionInfeasible,
    ROBP,
    ROBPOracle,
    SmallBiasSpace,
    TableOracle,
    build_small_bias_space,
    evaluate_system,
    load_junta_system,
    optimize_biased,
    optimize_graded,
    optimize_juntas,
    optimize_truthtables,
    partition_variables,
    robp_expectation,
    save_junta_system,
    system_expectation,
)


def table_system(n, b, specs, weights=None):
    """specs: list of (support, values)."""
    funcs = []
    for idx, (support, values) in enumerate(specs):
        w = Fraction(1) if weights is None else Fraction(weights[idx])
        funcs.append(Junta(tuple(support), TableOracle(b, values), w))
    return JuntaSystem(n, b, tuple(funcs))


def exhaustive_mean(sys_):
    """Exact expectation by full enumeration of M_b^n."""
    total = Fraction(0)
    count = (1 << sys_.b) ** sys_.n
    for vals in itertools.product(range(1 << sys_.b), repeat=sys_.n):
        total += evaluate_system(sys_, list(vals))
    return total / count


# --- PartialAssignment ---

def test_partial_assignment_graded_shapes():
    # b = 3: level 0 known, level 1 mixed, level 2 unknown -> graded, not fully
    pa = PartialAssignment(2, 3, (1, 0, None, 0, None, None))
    assert pa.is_graded()
    assert not pa.is_fully_graded()
    # clean prefix: fully graded
    pa2 = PartialAssignment(2, 3, (1, None, None, 0, None, None))
    assert pa2.is_fully_graded()
    # gap: level 0 unknown but level 1 known -> not graded
    pa3 = PartialAssignment(1, 2, (None, 1))
    assert not pa3.is_graded()


def test_partial_assignment_accessor():
    pa = PartialAssignment(2, 2, (1, 0, None, 1))
    assert pa.get(0, 0) == 1
    assert pa.get(0, 1) == 0
    assert pa.get(1, 0) is None
    assert pa.restrict([1]) == (None, 1)


# --- TableOracle ---

def test_table_oracle_expectation_matches_enumeration():
    rng = random.Random(1)
    for _ in range(30):
        w = rng.randint(1, 3)
        b = rng.randint(1, 2)
        values = [Fraction(rng.randint(-4, 4), 2) for _ in range((1 << b) ** w)]
        oracle = TableOracle(b, values)
        local = tuple(rng.choice([0, 1, None]) for _ in range(w * b))
        # brute force over unknowns
        unknown = [t for t, e in enumerate(local) if e is None]
        total = Fraction(0)
        for mask in range(1 << len(unknown)):
            bits = list(local)
            for t, pos in enumerate(unknown):
                bits[pos] = (mask >> t) & 1
            vals = [
                sum(bits[t * b + j] << (b - 1 - j) for j in range(b))
                for t in range(w)
            ]
            total += oracle.evaluate(vals)
        assert oracle.expectation(local) == total / (1 << len(unknown))


def test_table_oracle_continuous_matches_plain():
    # continuous PEO at q in {0, 1/2, 1} equals the plain PEO on {0, ?, 1}
    rng = random.Random(2)
    for _ in range(20):
        w = rng.randint(1, 4)
        oracle = TableOracle(1, [rng.randint(0, 3) for _ in range(1 << w)])
        local = tuple(rng.choice([0, 1, None]) for _ in range(w))
        q = [Fraction(1, 2) if e is None else Fraction(e) for e in local]
        assert oracle.expectation_q(q) == oracle.expectation(local)


def test_table_oracle_table_over():
    oracle = TableOracle(1, [0, 1, 2, 3])
    got = oracle.table_over([None, None], [0, 1])
    assert got == [Fraction(0), Fraction(1), Fraction(2), Fraction(3)]
    got = oracle.table_over([None, None], [1])
    assert got == [Fraction(1, 2), Fraction(5, 2)]


# --- ROBP ---

def _robp_const(c):
    return ROBP(start="s", nodes={}, sinks={"s": Fraction(c)})


def _robp_single_var():
    return ROBP(
        start="r",
        nodes={"r": (0, "zero", "one")},
        sinks={"zero": Fraction(0), "one": Fraction(1)},
    )


def test_robp_constant():
    _, e = robp_expectation(_robp_const(7), [])
    assert e == 7


def test_robp_single_variable():
    _, e = robp_expectation(_robp_single_var(), [Fraction(1, 4)])
    assert e == Fraction(1, 4)


def _robp_threshold_2_of_3():
    # count >= 2 of three bits, reading x0, x1, x2 in order
    nodes = {
        "a": (0, "b0", "b1"),
        "b0": (1, "c00", "c01"),
        "b1": (1, "c01", "c11"),
        "c00": (2, "no", "no"),       # at most 1 possible
        "c01": (2, "no", "yes"),
        "c11": (2, "yes", "yes"),
    }
    return ROBP(start="a", nodes=nodes, sinks={"no": Fraction(0), "yes": Fraction(1)})


def test_robp_threshold():
    robp = _robp_threshold_2_of_3()
    _, e = robp_expectation(robp, [Fraction(1, 2)] * 3)
    assert e == Fraction(1, 2)


def test_robp_matches_truth_table():
    rng = random.Random(3)
    robp = _robp_threshold_2_of_3()
    oracle = ROBPOracle(1, robp, 3)
    for vals in itertools.product([0, 1], repeat=3):
        expect = 1 if sum(vals) >= 2 else 0
        assert oracle.evaluate(vals) == expect


def test_robp_random_vs_enumeration():
    rng = random.Random(4)
    for _ in range(40):
        w = rng.randint(1, 5)
        # random layered read-once program reading variables in order
        sinks = {"s0": Fraction(0), "s1": Fraction(1)}
        nodes = {}
        layer = [f"n{w}_0"]  # start deepest name avoided; build backwards
        # build from the last variable up
        prev = ["s0", "s1"]
        for var in range(w - 1, -1, -1):
            cur = []
            for copy in range(min(2, len(prev))):
                nid = f"v{var}_{copy}"
                nodes[nid] = (var, rng.choice(prev), rng.choice(prev))
                cur.append(nid)
            prev = cur
        start = prev[0]
        robp = ROBP(start=start, nodes=nodes, sinks=sinks)
        q = [Fraction(rng.randint(0, 4), 4) for _ in range(w)]
        _, got = robp_expectation(robp, q)
        total = Fraction(0)
        for vals in itertools.product([0, 1], repeat=w):
            p = Fraction(1)
            for t in range(w):
                p *= q[t] if vals[t] else 1 - q[t]
            node = start
            while node in nodes:
                var, lo, hi = nodes[node]
                node = hi if vals[var] else lo
            total += p * sinks[node]
        assert got == total


def test_robp_rejects_cycle():
    robp = ROBP(start="a", nodes={"a": (0, "b", "b"), "b": (1, "a", "s")}, sinks={"s": Fraction(1)})
    with pytest.raises(OracleError, match="cycle"):
        robp.validate()


def test_robp_rejects_repeated_variable_on_path():
    robp = ROBP(
        start="a",
        nodes={"a": (0, "b", "b"), "b": (0, "s", "s")},
        sinks={"s": Fraction(1)},
    )
    with pytest.raises(OracleError, match="twice"):
        robp.validate()


# --- optimize_truthtables ---

def test_truthtables_single_projection():
    sys_ = table_system(1, 1, [((0,), [0, 1])])
    x = optimize_truthtables(sys_)
    assert x.bit(0) == 1
    assert evaluate_system(sys_, [1]) == 1


def test_truthtables_cancelling_parities():
    parity = [0, 1, 1, 0]
    anti = [1, 0, 0, 1]
    sys_ = table_system(2, 1, [((0, 1), parity), ((0, 1), anti)])
    x = optimize_truthtables(sys_)
    assert evaluate_system(sys_, [x.bit(0), x.bit(1)]) == 1  # identically 1


def test_truthtables_random_vs_mean():
    rng = random.Random(5)
    for _ in range(30):
        n = rng.randint(2, 5)
        specs = []
        for _ in range(3):
            w = rng.randint(1, min(3, n))
            support = tuple(sorted(rng.sample(range(n), w)))
            specs.append((support, [rng.randint(-3, 3) for _ in range(1 << w)]))
        sys_ = table_system(n, 1, specs)
        x = optimize_truthtables(sys_)
        val = evaluate_system(sys_, [x.bit(i) for i in range(n)])
        assert val >= exhaustive_mean(sys_)


# --- small-bias spaces ---

def verify_small_bias(space):
    import numpy as np

    support = space.support_size
    cols = [space.bit_column(i).astype(np.int64) for i in range(space.n)]
    for size in range(1, space.t + 1):
        bound = (1 + space.epsilon) * Fraction(1, 1 << size)
        for idxs in itertools.combinations(range(space.n), size):
            combined = sum(cols[i] << t for t, i in enumerate(idxs))
            counts = np.bincount(combined, minlength=1 << size)
            for pattern in range(1 << size):
                if Fraction(int(counts[pattern]), support) > bound:
                    return False, (idxs, pattern, int(counts[pattern]))
    return True, None


def test_small_bias_full_space_fallback():
    space = build_small_bias_space(6, 2, Fraction(1, 2))
    assert space.is_full_space
    assert space.support_size == 64
    assert space.epsilon == 0
    ok, _ = verify_small_bias(space)
    assert ok


def test_small_bias_powering_construction():
    space = build_small_bias_space(24, 3, Fraction(1), budget_log2=12)
    assert not space.is_full_space
    assert space.support_size == 1 << (2 * space.s)
    ok, witness = verify_small_bias(space)
    assert ok, witness


def test_small_bias_powering_at_small_n():
    # the n=8, t=3, eps=1 instance checked against the powering construction
    space = build_small_bias_space(8, 3, Fraction(1), force_powering=True)
    assert not space.is_full_space
    ok, witness = verify_small_bias(space)
    assert ok, witness
    # every 3-index pattern frequency is at most 2^-3 * 2
    cols = [space.bit_column(i).astype(int) for i in range(8)]
    for idxs in itertools.combinations(range(8), 3):
        combined = sum(cols[i] << t for t, i in enumerate(idxs))
        for pattern in range(8):
            freq = Fraction(int((combined == pattern).sum()), space.support_size)
            assert freq <= Fraction(2, 8)


def test_small_bias_per_bit_frequencies():
    # t = 1: each bit close to fair; the two-constant space {0^n, 1^n} would fail
    space = build_small_bias_space(20, 1, Fraction(1, 2), budget_log2=12)
    samples = space.sample_ints()
    bound = (1 + space.epsilon) * Fraction(1, 2)
    for i in range(space.n):
        ones = sum((s >> i) & 1 for s in samples)
        assert Fraction(ones, len(samples)) <= bound
        assert Fraction(len(samples) - ones, len(samples)) <= bound


def test_small_bias_columns_match_ints():
    space = build_small_bias_space(10, 2, Fraction(1), budget_log2=10)
    samples = space.sample_ints()
    for pos in range(space.n):
        col = space.bit_column(pos)
        for idx in range(space.support_size):
            assert col[idx] == (samples[idx] >> pos) & 1
            assert space.sample_bit(idx, pos) == col[idx]


def test_small_bias_rejects_bad_params():
    with pytest.raises(ValueError):
        build_small_bias_space(4, 5, Fraction(1))
    with pytest.raises(ValueError):
        build_small_bias_space(4, 2, Fraction(0))


# --- partition_variables ---

def test_partition_trivial_when_narrow():
    fam = NeighborhoodFamily.make(6, [[0, 1], [2, 3]])
    part = partition_variables(fam, 3)
    assert part.parts == (tuple(range(6)),)
    assert part.rounds == 0


def test_partition_splits_wide_set():
    fam = NeighborhoodFamily.make(8, [list(range(8))])
    part = partition_variables(fam, 4)
    assert part.verify(fam)
    assert all(len(set(range(8)) & set(p)) <= 4 for p in part.parts)


def test_partition_empty_family():
    fam = NeighborhoodFamily.make(5, [])
    part = partition_variables(fam, 1)
    assert part.parts == (tuple(range(5)),)


def test_partition_q_monotone():
    rng = random.Random(6)
    for _ in range(10):
        n = rng.randint(8, 20)
        sets = [rng.sample(range(n), rng.randint(4, min(10, n))) for _ in range(rng.randint(1, 6))]
        fam = NeighborhoodFamily.make(n, sets)
        t_cap = 3
        try:
            part = partition_variables(fam, t_cap)
        except PartitionInfeasible:
            continue
        assert part.verify(fam)
        for a, b in itertools.pairwise(part.q_history):
            assert b < a


# --- optimize_juntas / graded / biased ---

def test_juntas_or_of_three():
    or3 = [0] + [1] * 7
    sys_ = table_system(3, 1, [((0, 1, 2), or3)])
    assert exhaustive_mean(sys_) == Fraction(7, 8)
    x = optimize_juntas(sys_)
    assert evaluate_system(sys_, [x.bit(i) for i in range(3)]) == 1


def test_juntas_all_constant():
    sys_ = table_system(2, 1, [((), [5]), ((), [2])])
    x = optimize_juntas(sys_)
    assert evaluate_system(sys_, [x.bit(0), x.bit(1)]) == 7


def test_juntas_random_vs_mean():
    rng = random.Random(7)
    for _ in range(25):
        n = rng.randint(2, 8)
        specs = []
        for _ in range(rng.randint(1, 4)):
            w = rng.randint(1, min(4, n))
            support = tuple(sorted(rng.sample(range(n), w)))
            specs.append((support, [rng.randint(-3, 5) for _ in range(1 << w)]))
        sys_ = table_system(n, 1, specs)
        x = optimize_juntas(sys_)
        val = evaluate_system(sys_, [x.bit(i) for i in range(n)])
        assert val >= exhaustive_mean(sys_)


def test_juntas_forced_partition():
    # a single wide function with a tight cap exercises the multi-part path
    rng = random.Random(8)
    w = 8
    values = [rng.randint(0, 3) for _ in range(1 << w)]
    sys_ = table_system(w, 1, [(tuple(range(w)), values)])
    cfg = OptimizerConfig(t_cap=3)
    x = optimize_juntas(sys_, cfg)
    val = evaluate_system(sys_, [x.bit(i) for i in range(w)])
    assert val >= exhaustive_mean(sys_)


def test_graded_reduces_to_plain_for_b1():
    rng = random.Random(9)
    specs = [((0, 1), [rng.randint(0, 3) for _ in range(4)])]
    sys_ = table_system(3, 1, specs)
    x = optimize_graded(sys_)
    assert evaluate_system(sys_, x) >= exhaustive_mean(sys_)


def test_graded_equality_indicator():
    # f = [x_0 == 3] over M_4: expectation 1/4, optimizer must hit it
    values = [0, 0, 0, 1]
    sys_ = table_system(1, 2, [((0,), values)])
    assert exhaustive_mean(sys_) == Fraction(1, 4)
    x = optimize_graded(sys_)
    assert x[0] == 3
    assert evaluate_system(sys_, x) == 1


def test_graded_random_vs_mean():
    rng = random.Random(10)
    for _ in range(15):
        n = rng.randint(1, 4)
        b = rng.randint(1, 3)
        if n * b > 10:
            continue
        specs = []
        for _ in range(rng.randint(1, 3)):
            w = rng.randint(1, min(2, n))
            support = tuple(sorted(rng.sample(range(n), w)))
            size = (1 << b) ** w
            specs.append((support, [rng.randint(-2, 4) for _ in range(size)]))
        sys_ = table_system(n, b, specs)
        x = optimize_graded(sys_)
        assert evaluate_system(sys_, x) >= exhaustive_mean(sys_)


def weighted_mean(sys_, p):
    total = Fraction(0)
    for vals in itertools.product([0, 1], repeat=sys_.n):
        prob = Fraction(1)
        for i, v in enumerate(vals):
            prob *= p[i] if v else 1 - p[i]
        total += prob * evaluate_system(sys_, list(vals))
    return total


def test_biased_half_probabilities_match_plain():
    rng = random.Random(11)
    specs = [((0, 1), [rng.randint(0, 3) for _ in range(4)])]
    sys_ = table_system(2, 1, specs)
    p = [Fraction(1, 2), Fraction(1, 2)]
    x = optimize_biased(sys_, p, b=1)
    assert evaluate_system(sys_, [x.bit(0), x.bit(1)]) >= exhaustive_mean(sys_)


def test_biased_single_variable():
    sys_ = table_system(1, 1, [((0,), [0, 1])])
    x = optimize_biased(sys_, [Fraction(3, 4)], b=2)
    assert x.bit(0) == 1


def test_biased_rejects_non_dyadic():
    sys_ = table_system(1, 1, [((0,), [0, 1])])
    with pytest.raises(ValueError, match="dyadic"):
        optimize_biased(sys_, [Fraction(1, 3)], b=2)


def test_biased_random_vs_weighted_mean():
    rng = random.Random(12)
    for _ in range(15):
        n = rng.randint(1, 5)
        b = 2
        specs = []
        for _ in range(rng.randint(1, 3)):
            w = rng.randint(1, min(2, n))
            support = tuple(sorted(rng.sample(range(n), w)))
            specs.append((support, [rng.randint(0, 3) for _ in range(1 << w)]))
        sys_ = table_system(n, 1, specs)
        p = [Fraction(rng.randint(0, 4), 4) for _ in range(n)]
        x = optimize_biased(sys_, p, b=b)
        val = evaluate_system(sys_, [x.bit(i) for i in range(n)])
        assert val >= weighted_mean(sys_, p)


# --- consistency между oracles and system helpers ---

def test_system_expectation_matches_enumeration():
    rng = random.Random(13)
    sys_ = table_system(
        3, 1,
        [((0, 1), [rng.randint(-2, 2) for _ in range(4)]),
         ((2,), [rng.randint(-2, 2) for _ in range(2)])],
        weights=[Fraction(1, 2), 2],
    )
    assert system_expectation(sys_) == exhaustive_mean(sys_)


def test_json_roundtrip(tmp_path):
    robp = _robp_single_var()
    sys_ = JuntaSystem(
        3, 1,
        (
            Junta((0, 2), TableOracle(1, [0, "1/2", 1, "3/2"])),
            Junta((1,), ROBPOracle(1, robp, 1)),
        ),
    )
    path = tmp_path / "system.json"
    save_junta_system(sys_, str(path))
    loaded = load_junta_system(str(path))
    assert loaded.n == 3 and loaded.b == 1
    assert loaded.funcs[0].support == (0, 2)
    assert loaded.funcs[0].oracle.values == (0, Fraction(1, 2), 1, Fraction(3, 2))
    assert isinstance(loaded.funcs[1].oracle, ROBPOracle)
    local = (None,)
    assert loaded.funcs[1].oracle.expectation(local) == Fraction(1, 2)
