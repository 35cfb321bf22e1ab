"""Exhaustive ground truth for small instances.

Enumerates all n^m complete assignments, tracking the best comparison key
overall and among EQ1 allocations for each requested p, the exact price of
equity, and the leximin value vector.  Refuses budgets it cannot honour;
it never samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .model import Allocation, Instance, subset_value_table
from .welfare import PParam, max_positive_count, poe_ratio, welfare_key

DEFAULT_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


@dataclass
class OracleResult:
    best_key: dict[PParam, tuple]
    best_alloc: dict[PParam, Allocation]
    best_eq1_key: dict[PParam, tuple]
    best_eq1_alloc: dict[PParam, Allocation]
    poe: dict[PParam, object]
    leximin: tuple[int, ...]
    enumeration_count: int
    restrict: int

    def to_json(self) -> dict:
        from .welfare import num_to_json

        return {
            "poe": {str(p): num_to_json(v) for p, v in self.poe.items()},
            "leximin": list(self.leximin),
            "enumeration_count": self.enumeration_count,
            "restrict": self.restrict,
            "best": {str(p): a.to_json() for p, a in self.best_alloc.items()},
            "best_eq1": {str(p): a.to_json() for p, a in self.best_eq1_alloc.items()},
        }


def _check_budget(inst: Instance, budget: int) -> int:
    total = inst.n ** inst.m
    if total > budget:
        raise BudgetExceededError(
            f"{inst.n}^{inst.m} = {total} assignments exceed the budget of {budget}"
        )
    return total


def _assignment_values(inst: Instance):
    """Yield (index, masks, values) over all assignments in lexicographic
    order (good 0 is the most significant digit)."""
    n, m = inst.n, inst.m
    if m <= 16:
        tables = [subset_value_table(v) for v in inst.valuations]
    else:
        tables = None
    masks = [0] * n
    masks[0] = (1 << m) - 1  # initial assignment: everything to agent 0
    assign = [0] * m

    def values_of(masks: list[int]) -> tuple[int, ...]:
        if tables is not None:
            return tuple(tables[i][masks[i]] for i in range(n))
        return tuple(
            inst.valuations[i].value(g for g in range(m) if (masks[i] >> g) & 1)
            for i in range(n)
        )

    idx = 0
    while True:
        yield idx, list(masks), values_of(masks), tables
        idx += 1
        pos = m - 1
        while pos >= 0:
            g_bit = 1 << pos
            masks[assign[pos]] &= ~g_bit
            assign[pos] += 1
            if assign[pos] < n:
                masks[assign[pos]] |= g_bit
                break
            assign[pos] = 0
            masks[0] |= g_bit
            pos -= 1
        if pos < 0:
            return


def _is_eq1_fast(inst: Instance, masks: list[int], values: tuple[int, ...], tables) -> bool:
    vmin = min(values)
    for k in range(inst.n):
        mk = masks[k]
        if mk == 0:
            continue
        vk = values[k]
        if vk <= vmin:
            continue
        if vk - 1 > vmin:
            return False
        # vk == vmin + 1: need one good whose removal actually drops the value
        dropped = False
        mm = mk
        while mm:
            bit = mm & -mm
            mm ^= bit
            if tables is not None:
                reduced = tables[k][mk ^ bit]
            else:
                reduced = inst.valuations[k].value(
                    g for g in range(inst.m) if ((mk ^ bit) >> g) & 1
                )
            if reduced == vk - 1:
                dropped = True
                break
        if not dropped:
            return False
    return True


def _alloc_from_index(inst: Instance, idx: int) -> Allocation:
    owner = [0] * inst.m
    for pos in range(inst.m - 1, -1, -1):
        idx, owner[pos] = divmod(idx, inst.n)
    return Allocation(owner, inst.n)


def enumerate_allocations(
    inst: Instance, p_list: Iterable[PParam], budget: int = DEFAULT_BUDGET
) -> OracleResult:
    """Exact optima by brute force.

    Ties between allocations with equal keys break toward the first one in
    lexicographic assignment order.  Raises ``BudgetExceededError`` when
    n^m exceeds the budget.
    """
    p_list = list(p_list)
    count = _check_budget(inst, budget)
    restrict = max_positive_count(inst)

    all_vecs: dict[tuple[int, ...], int] = {}
    eq1_vecs: dict[tuple[int, ...], int] = {}
    leximin: tuple[int, ...] | None = None
    for idx, masks, values, tables in _assignment_values(inst):
        svals = tuple(sorted(values))
        if svals not in all_vecs:
            all_vecs[svals] = idx
        if leximin is None or svals > leximin:
            leximin = svals
        if _is_eq1_fast(inst, masks, values, tables) and svals not in eq1_vecs:
            eq1_vecs[svals] = idx

    best_key: dict[PParam, tuple] = {}
    best_alloc: dict[PParam, Allocation] = {}
    best_eq1_key: dict[PParam, tuple] = {}
    best_eq1_alloc: dict[PParam, Allocation] = {}
    poe: dict[PParam, object] = {}
    for p in p_list:
        for vecs, key_out, alloc_out in (
            (all_vecs, best_key, best_alloc),
            (eq1_vecs, best_eq1_key, best_eq1_alloc),
        ):
            top = None
            top_idx = None
            for vec, idx in vecs.items():
                key = welfare_key(vec, p, restrict)
                if top is None or key > top or (key == top and idx < top_idx):
                    top, top_idx = key, idx
            key_out[p] = top
            alloc_out[p] = _alloc_from_index(inst, top_idx)
        if restrict == 0:
            poe[p] = Fraction(1)
        else:
            poe[p] = poe_ratio(best_key[p], best_eq1_key[p], p, restrict)

    assert leximin is not None
    return OracleResult(
        best_key=best_key,
        best_alloc=best_alloc,
        best_eq1_key=best_eq1_key,
        best_eq1_alloc=best_eq1_alloc,
        poe=poe,
        leximin=leximin,
        enumeration_count=count,
        restrict=restrict,
    )


def is_pareto_optimal(
    inst: Instance, alloc: Allocation, budget: int = DEFAULT_BUDGET
) -> bool:
    """True iff no enumerated allocation weakly improves every agent and
    strictly improves at least one."""
    _check_budget(inst, budget)
    if not alloc.is_complete:
        raise ValueError("Pareto check requires a complete allocation")
    base = alloc.values(inst)
    for _, _, values, _ in _assignment_values(inst):
        if all(v >= b for v, b in zip(values, base)) and any(
            v > b for v, b in zip(values, base)
        ):
            return False
    return True
