"""Welfare measures, the positive-subset convention, and comparison keys."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poe_toolkit.bounds import lambda_family_poe
from poe_toolkit.generators import (
    example1_instance,
    gen_lower_bound_instance,
    random_binary_additive,
)
from poe_toolkit.doubly import solve_flow
from poe_toolkit.model import Allocation, BinaryAdditive, Instance
from poe_toolkit.welfare import (
    NASH,
    NEG_INF,
    PParam,
    UTILITARIAN,
    max_positive_count,
    p_mean,
    welfare_key,
    welfare_report,
)

P_GRID = (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-1),
          PParam.real(-10), NEG_INF)


# ---------------------------------------------------------------------------
# PParam
# ---------------------------------------------------------------------------


def test_parse_tokens():
    assert PParam.parse("1") == UTILITARIAN
    assert PParam.parse("1/2").value == Fraction(1, 2)
    assert PParam.parse("nash") == NASH
    assert PParam.parse("-inf") == NEG_INF
    assert PParam.parse("0") == NASH  # the p = 0 mean is the Nash limit
    assert PParam.parse("-0.5").value == Fraction(-1, 2)


def test_parse_round_trip():
    for p in P_GRID:
        assert PParam.parse(str(p)) == p


def test_p_above_one_rejected():
    with pytest.raises(ValueError):
        PParam.real(2)


# ---------------------------------------------------------------------------
# positive capacity
# ---------------------------------------------------------------------------


def test_capacity_family():
    for r, W in ((2, 2), (3, 4), (4, 1)):
        inst = gen_lower_bound_instance(r, W)
        assert max_positive_count(inst) == W + r - 1


def test_capacity_disjoint_singletons():
    inst = Instance([BinaryAdditive([1 if g == i else 0 for g in range(3)]) for i in range(3)])
    assert max_positive_count(inst) == 3


def test_capacity_single_contested_good():
    inst = Instance([BinaryAdditive([1])] * 3)
    assert max_positive_count(inst) == 1


# ---------------------------------------------------------------------------
# p_mean
# ---------------------------------------------------------------------------


def test_p_mean_utilitarian_exact():
    assert p_mean((1, 1, 2), UTILITARIAN, 3) == Fraction(4, 3)


def test_p_mean_nash_geometric():
    assert p_mean((1, 4), NASH, 2) == pytest.approx(2.0)


def test_p_mean_egalitarian():
    assert p_mean((3, 1, 2), NEG_INF, 3) == 1


def test_p_mean_family_optimum_matches_family_formula():
    # optimal vector of the (r, W) family: W ones and s copies of W
    for p in (PParam.real(-1), PParam.real(Fraction(-1, 2)), PParam.real(-10)):
        for r, W in ((3, 4), (5, 2)):
            s = r - 1
            values = (1,) * W + (W,) * s
            num = p_mean(values, p, W + s)
            eq1 = p_mean((1,) * (W + s), p, W + s)
            assert float(num) / float(eq1) == pytest.approx(
                float(lambda_family_poe(p, W, r)), rel=1e-12
            )


def test_p_mean_dominated_vector_counts_first():
    restrict = 2
    dominated = welfare_key((100, 0), UTILITARIAN, restrict)
    attaining = welfare_key((1, 1), UTILITARIAN, restrict)
    assert attaining > dominated  # positive count precedes welfare


def test_p_mean_plain_mode_matches_convention_on_positive_vectors():
    values = (2, 3, 5)
    for p in P_GRID:
        assert p_mean(values, p) == p_mean(values, p, 3)


# ---------------------------------------------------------------------------
# welfare_report
# ---------------------------------------------------------------------------


def test_report_identical_balanced():
    inst = Instance([BinaryAdditive([1, 1, 1, 1])] * 2)
    alloc = Allocation([0, 0, 1, 1], 2)
    rep = welfare_report(inst, alloc, P_GRID)
    for p in P_GRID:
        assert float(rep.pmean[p]) == pytest.approx(2.0)


def test_report_example1_flow_welfare():
    inst = example1_instance()
    alloc = solve_flow(inst)
    rep = welfare_report(inst, alloc, [UTILITARIAN])
    assert sum(rep.values) == 6  # utilitarian welfare equals the good count


def test_report_values_match_direct_calls(rng):
    for _ in range(25):
        inst = random_binary_additive(rng, rng.randint(2, 4), rng.randint(1, 6))
        alloc = Allocation([rng.randrange(inst.n) for _ in range(inst.m)], inst.n)
        rep = welfare_report(inst, alloc, [UTILITARIAN])
        assert rep.values == tuple(
            inst.valuations[i].value(alloc.bundle(i)) for i in range(inst.n)
        )


# ---------------------------------------------------------------------------
# analytic properties
# ---------------------------------------------------------------------------

positive_vectors = st.lists(st.floats(0.05, 50.0), min_size=2, max_size=6)


@settings(max_examples=150)
@given(positive_vectors, positive_vectors, st.floats(0, 1))
def test_concavity(x, y, t):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    mix = [t * a + (1 - t) * b for a, b in zip(x, y)]
    for p in (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-1), NEG_INF):
        lhs = float(p_mean(mix, p))
        rhs = t * float(p_mean(x, p)) + (1 - t) * float(p_mean(y, p))
        assert lhs >= rhs - 1e-9


@settings(max_examples=150)
@given(positive_vectors, st.data())
def test_averaging_weakly_increases(x, data):
    idx = data.draw(st.sets(st.integers(0, len(x) - 1), min_size=1))
    avg = sum(x[i] for i in idx) / len(idx)
    y = [avg if i in idx else v for i, v in enumerate(x)]
    for p in P_GRID:
        assert float(p_mean(y, p)) >= float(p_mean(x, p)) - 1e-9


@settings(max_examples=150)
@given(positive_vectors, st.data())
def test_jensen_direction(x, data):
    l = len(x)
    mean = sum(x) / l
    for p in (Fraction(0), Fraction(1, 2), Fraction(1)):
        q = 1 - p
        assert sum(v ** float(q) for v in x) / l <= float(mean) ** float(q) + 1e-9
    for p in (Fraction(-1), Fraction(-3)):
        q = 1 - p
        assert sum(v ** float(q) for v in x) / l >= float(mean) ** float(q) - 1e-9


def test_strict_monotonicity(rng):
    for _ in range(60):
        n = rng.randint(2, 5)
        values = [rng.randint(1, 9) for _ in range(n)]
        i = rng.randrange(n)
        bumped = list(values)
        bumped[i] += 1
        for p in (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-2)):
            assert float(p_mean(bumped, p, n)) > float(p_mean(values, p, n))


def test_key_total_preorder(rng):
    for p in P_GRID:
        keys = []
        for _ in range(40):
            n = rng.randint(2, 4)
            values = tuple(rng.randint(0, 4) for _ in range(n))
            keys.append(welfare_key(values, p, n))
        keys.sort()  # comparable without error
        assert keys == sorted(keys)


def test_exact_keys_for_exact_ps():
    key1 = welfare_key((2, 3, 4), UTILITARIAN, 3)
    assert key1 == (3, Fraction(3))
    assert welfare_key((2, 3, 4), NASH, 3) == (3, 24)
    assert welfare_key((2, 3, 4), NEG_INF, 3) == (3, 2)
