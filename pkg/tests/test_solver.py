"""Solver pipeline against the exhaustive oracle and the structural claims."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from poe_toolkit.generators import (
    gen_lower_bound_instance,
    gen_submodular_lb_instance,
    random_binary_additive,
    random_matroid_gf2,
)
from poe_toolkit.model import (
    Allocation,
    BinaryAdditive,
    Instance,
    is_eq1,
    make_clean,
    wasted_goods,
)
from poe_toolkit.oracle import enumerate_allocations
from poe_toolkit.solver import (
    SolverInternalError,
    diagnostics,
    max_utilitarian_clean,
    nash_optimal,
    solve,
    truncate,
)
from poe_toolkit.welfare import (
    NASH,
    NEG_INF,
    PParam,
    UTILITARIAN,
    max_positive_count,
    welfare_key,
)

GATE_PS = (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-1), NEG_INF)
EXACT_PS = (UTILITARIAN, NASH, NEG_INF)


def brute_force_max_utilitarian(inst: Instance) -> int:
    best = 0
    for assign in itertools.product(range(inst.n), repeat=inst.m):
        alloc = Allocation(assign, inst.n)
        best = max(best, sum(alloc.values(inst)))
    return best


def small_corpus(rng, count):
    out = []
    for _ in range(count):
        n, m = rng.randint(2, 4), rng.randint(1, 7)
        if rng.random() < 0.5:
            out.append(random_binary_additive(rng, n, m))
        else:
            out.append(random_matroid_gf2(rng, n, m))
    return out


# ---------------------------------------------------------------------------
# max_utilitarian_clean
# ---------------------------------------------------------------------------


def test_util_family_total():
    for r, W in ((2, 2), (3, 4), (4, 3)):
        inst = gen_lower_bound_instance(r, W)
        alloc = max_utilitarian_clean(inst)
        assert sum(alloc.values(inst)) == r * W


def test_util_matroid_family_total():
    for k in (1, 2, 3, 4):
        inst = gen_submodular_lb_instance(k)
        alloc = max_utilitarian_clean(inst)
        assert sum(alloc.values(inst)) == k + k * k


def test_util_matches_brute_force(rng):
    for inst in small_corpus(rng, 40):
        alloc = max_utilitarian_clean(inst)
        assert sum(alloc.values(inst)) == brute_force_max_utilitarian(inst)
        for i, b in enumerate(alloc.bundles()):
            assert inst.valuations[i].value(b) == len(b)  # clean


# ---------------------------------------------------------------------------
# nash_optimal
# ---------------------------------------------------------------------------


def test_nash_family_value_multiset():
    inst = gen_lower_bound_instance(2, 2)
    alloc = nash_optimal(inst)
    assert sorted(alloc.values(inst)) == [0, 1, 1, 2]


def test_nash_identical_two_agents_balanced():
    inst = Instance([BinaryAdditive([1, 1, 1, 1])] * 2)
    alloc = nash_optimal(inst)
    assert sorted(alloc.values(inst)) == [2, 2]


def test_nash_matches_oracle_key(rng):
    for inst in small_corpus(rng, 40):
        alloc = nash_optimal(inst)
        assert alloc.is_complete
        restrict = max_positive_count(inst)
        orc = enumerate_allocations(inst, [NASH], budget=10**6)
        assert welfare_key(alloc.values(inst), NASH, restrict) == orc.best_key[NASH]


# ---------------------------------------------------------------------------
# truncate
# ---------------------------------------------------------------------------


def test_truncate_family_all_positive_at_one():
    for r, W in ((2, 2), (3, 2), (4, 3)):
        inst = gen_lower_bound_instance(r, W)
        b = truncate(inst, nash_optimal(inst))
        values = b.values(inst)
        assert all(v == 1 for v in values if v > 0)
        assert sum(1 for v in values if v > 0) == W + r - 1


def test_truncate_noop_when_already_eq1(rng):
    inst = Instance([BinaryAdditive([1, 1, 1, 1])] * 2)
    a_star = nash_optimal(inst)
    assert truncate(inst, a_star).values(inst) == a_star.values(inst)


def test_truncate_matroid_family():
    for k in (2, 3, 4):
        inst = gen_submodular_lb_instance(k)
        b = truncate(inst, nash_optimal(inst))
        values = sorted(b.values(inst))
        assert values == [1] * k + [min(2, k)] * k
        assert sum(values) <= 3 * k


def test_truncate_band_structure(rng):
    for inst in small_corpus(rng, 60):
        a_star = nash_optimal(inst)
        b = truncate(inst, a_star)
        l = min(a_star.values(inst))
        assert set(b.values(inst)) <= {l, l + 1}
        assert is_eq1(inst, b)


def test_truncate_rejects_partial():
    inst = gen_lower_bound_instance(2, 2)
    with pytest.raises(ValueError):
        truncate(inst, Allocation([-1] * inst.m, inst.n))


def test_truncate_flags_non_optimal_input():
    # an allocation that is utilitarian optimal but wildly unbalanced:
    # one agent hoards goods another type-1 agent values
    inst = gen_lower_bound_instance(2, 4)  # 5 type-1 agents, 1 type-2
    owner = [0, 0, 0, 0, 5, 5, 5, 5]
    bad = Allocation(owner, inst.n)
    with pytest.raises(SolverInternalError):
        truncate(inst, bad)


# ---------------------------------------------------------------------------
# solve and the oracle gates
# ---------------------------------------------------------------------------


def test_solve_family_poe_exact():
    res = solve(gen_lower_bound_instance(2, 2), [UTILITARIAN])
    assert res.poe[UTILITARIAN] == Fraction(4, 3)


def test_solve_r1_value_vectors_match(rng):
    for _ in range(30):
        inst = random_matroid_gf2(rng, rng.randint(2, 4), rng.randint(1, 6), identical=True)
        res = solve(inst, GATE_PS)
        assert sorted(res.b.values(inst)) == sorted(res.a_star.values(inst))
        for p in GATE_PS:
            assert res.poe[p] == 1


def test_oracle_gates_on_random_corpus(rng):
    for inst in small_corpus(rng, 60):
        res = solve(inst, GATE_PS)
        orc = enumerate_allocations(inst, GATE_PS, budget=10**6)
        for p in GATE_PS:
            got_a, want_a = res.report_a_star.keys[p], orc.best_key[p]
            got_b, want_b = res.report_b.keys[p], orc.best_eq1_key[p]
            if p in EXACT_PS:
                assert got_a == want_a
                assert got_b == want_b
            else:
                assert got_a[0] == want_a[0]
                assert float(got_a[1]) == pytest.approx(float(want_a[1]), rel=1e-9)
                assert got_b[0] == want_b[0]
                assert float(got_b[1]) == pytest.approx(float(want_b[1]), rel=1e-9)


def test_leximin_when_near_equal(rng):
    checked = 0
    for inst in small_corpus(rng, 40):
        a_star = nash_optimal(inst)
        values = a_star.values(inst)
        positives = [v for v in values if v > 0]
        if positives and max(positives) - min(positives) <= 1:
            orc = enumerate_allocations(inst, [NEG_INF], budget=10**6)
            assert tuple(sorted(values)) == orc.leximin
            checked += 1
    assert checked


def test_a_star_clean_completable(rng):
    for inst in small_corpus(rng, 30):
        a_star = nash_optimal(inst)
        cleaned = make_clean(inst, a_star)
        assert cleaned.values(inst) == a_star.values(inst)


# ---------------------------------------------------------------------------
# the rank and floor bounds on solver output
# ---------------------------------------------------------------------------


def test_waste_bound_on_truncated_allocation(rng):
    from poe_toolkit.bounds import rank_of_instance

    for _ in range(60):
        n, m = rng.randint(2, 5), rng.randint(2, 10)
        W = rng.randint(max(1, -(-m // n)), m)
        inst = random_binary_additive(rng, n, m, W=W, every_good_valued=True)
        res = solve(inst, [UTILITARIAN])
        rank = rank_of_instance(inst)
        assert res.poe[UTILITARIAN] <= rank
        waste = len(wasted_goods(inst, res.b))
        assert Fraction(waste) <= Fraction(m) * (1 - Fraction(1, rank))


def test_matroid_floor(rng):
    for _ in range(40):
        n, m = rng.randint(2, 5), rng.randint(2, 8)
        inst = random_matroid_gf2(rng, n, m, W=rng.randint(1, min(4, m)))
        W = inst.normalisation()
        res = solve(inst, [UTILITARIAN, NASH, PParam.real(-1)])
        for v in res.b.values(inst):
            if v > 0:
                assert v >= Fraction(W, 2 * n)
        for p, poe in res.poe.items():
            assert float(poe) <= 2 * n + 1e-9


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def test_diagnostics_family_r3_W4():
    inst = gen_lower_bound_instance(3, 4)
    d = diagnostics(inst, nash_optimal(inst))
    assert d.agents_per_type[0] == 5 and d.goods_per_type[0] == 4
    assert d.truncation_level == 1  # ceil(4/5); flagged, not fatal
    assert d.warnings
    assert d.retained_fraction == Fraction(5, 7)


def test_diagnostics_integral_ratio_bumps_level():
    # two types, each agent of type 1 gets exactly 3 goods
    inst = Instance(
        [BinaryAdditive([1, 1, 1, 0, 0, 0]), BinaryAdditive([0, 0, 0, 1, 1, 1])]
    )
    d = diagnostics(inst, nash_optimal(inst))
    assert d.truncation_level == 4  # 1 + 3


def test_diagnostics_retained_types_cover_normalisation(rng):
    # goods assigned to retained types total at least W
    for _ in range(60):
        n, m = rng.randint(2, 5), rng.randint(2, 10)
        W = rng.randint(max(1, -(-m // n)), m)
        inst = random_binary_additive(rng, n, m, W=W, every_good_valued=True)
        d = diagnostics(inst, nash_optimal(inst))
        assert sum(d.goods_per_type[: d.retained_types]) >= W


def test_diagnostics_rejects_matroids(rng):
    inst = random_matroid_gf2(rng, 2, 3)
    with pytest.raises(ValueError):
        diagnostics(inst, nash_optimal(inst))


def test_solve_serialization_round_trip():
    import json

    res = solve(gen_lower_bound_instance(2, 2), [UTILITARIAN, NASH])
    doc = json.loads(json.dumps(res.to_json()))
    assert doc["poe"]["1"] == "4/3"
    assert doc["a_star"]["owner"] == list(res.a_star.owner)
