"""Brute-force oracle: exact optima, price of equity, Pareto checks."""

from __future__ import annotations

from fractions import Fraction

import pytest

from poe_toolkit.generators import (
    gen_lower_bound_instance,
    random_binary_additive,
    random_matroid_gf2,
    unnormalised_2agent_instance,
)
from poe_toolkit.model import Allocation, BinaryAdditive, Instance, is_eq1
from poe_toolkit.oracle import (
    BudgetExceededError,
    enumerate_allocations,
    is_pareto_optimal,
)
from poe_toolkit.solver import nash_optimal
from poe_toolkit.welfare import NASH, NEG_INF, PParam, UTILITARIAN

P_LIST = (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-1), NEG_INF)


def test_family_poe_exact():
    orc = enumerate_allocations(gen_lower_bound_instance(2, 2), [UTILITARIAN])
    assert orc.poe[UTILITARIAN] == Fraction(4, 3)
    assert orc.enumeration_count == 256


def test_unnormalised_example_poe():
    for k in (6, 9):
        orc = enumerate_allocations(unnormalised_2agent_instance(k), [UTILITARIAN])
        assert orc.poe[UTILITARIAN] == Fraction(k, 3)


def test_identical_instances_poe_one(rng):
    for _ in range(20):
        inst = random_matroid_gf2(rng, rng.randint(2, 3), rng.randint(1, 5), identical=True)
        orc = enumerate_allocations(inst, P_LIST)
        for p in P_LIST:
            assert orc.poe[p] == 1


def test_budget_refusal():
    inst = random_binary_additive(__import__("random").Random(0), 4, 8)
    with pytest.raises(BudgetExceededError):
        enumerate_allocations(inst, [UTILITARIAN], budget=1000)


def test_best_allocations_attain_keys(rng):
    from poe_toolkit.welfare import max_positive_count, welfare_key

    for _ in range(15):
        inst = random_binary_additive(rng, rng.randint(2, 3), rng.randint(1, 6))
        restrict = max_positive_count(inst)
        orc = enumerate_allocations(inst, P_LIST)
        for p in P_LIST:
            best = orc.best_alloc[p]
            assert welfare_key(best.values(inst), p, restrict) == orc.best_key[p]
            fair = orc.best_eq1_alloc[p]
            assert is_eq1(inst, fair)
            assert welfare_key(fair.values(inst), p, restrict) == orc.best_eq1_key[p]
            assert orc.best_key[p] >= orc.best_eq1_key[p]
            assert float(orc.poe[p]) >= 1 - 1e-12


def test_eq1_detection_matches_predicate(rng):
    # the enumerator's fast EQ1 test agrees with the definitional predicate
    import itertools

    for _ in range(10):
        inst = (
            random_binary_additive(rng, 2, rng.randint(1, 5))
            if rng.random() < 0.5
            else random_matroid_gf2(rng, 3, 4)
        )
        orc = enumerate_allocations(inst, [UTILITARIAN])
        brute_best = None
        for assign in itertools.product(range(inst.n), repeat=inst.m):
            alloc = Allocation(assign, inst.n)
            if is_eq1(inst, alloc):
                from poe_toolkit.welfare import max_positive_count, welfare_key

                key = welfare_key(
                    alloc.values(inst), UTILITARIAN, max_positive_count(inst)
                )
                if brute_best is None or key > brute_best:
                    brute_best = key
        assert brute_best == orc.best_eq1_key[UTILITARIAN]


def test_pareto_optimal_solver_output(rng):
    for _ in range(10):
        inst = random_matroid_gf2(rng, rng.randint(2, 3), rng.randint(1, 5))
        a_star = nash_optimal(inst)
        assert is_pareto_optimal(inst, a_star)


def test_pareto_rejects_waste():
    # giving the valued good to the indifferent agent is dominated
    inst = Instance([BinaryAdditive([1, 1]), BinaryAdditive([1, 0])])
    wasteful = Allocation([1, 1], 2)  # agent 1 holds g1 at zero value
    assert not is_pareto_optimal(inst, wasteful)


def test_pareto_single_agent():
    inst = Instance([BinaryAdditive([1, 0])])
    assert is_pareto_optimal(inst, Allocation([0, 0], 1))


def test_leximin_vector(rng):
    import itertools

    for _ in range(10):
        inst = random_binary_additive(rng, rng.randint(2, 3), rng.randint(1, 5))
        orc = enumerate_allocations(inst, [UTILITARIAN])
        best = max(
            tuple(sorted(Allocation(a, inst.n).values(inst)))
            for a in itertools.product(range(inst.n), repeat=inst.m)
        )
        assert orc.leximin == best


def test_deterministic_tie_break():
    inst = Instance([BinaryAdditive([1]), BinaryAdditive([1])])
    orc = enumerate_allocations(inst, [UTILITARIAN])
    # both assignments have key (1, 1/1); the first in enumeration order wins
    assert orc.best_alloc[UTILITARIAN].owner == (0,)
