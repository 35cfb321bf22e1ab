"""Optimal and optimal-EQ1 allocations for binary submodular valuations.

The pipeline is:

1. ``max_utilitarian_clean`` — matroid-partition style augmentation on the
   good-exchange digraph, yielding a clean partial allocation of maximum
   total value.
2. ``nash_optimal`` — value-balancing transfer paths (move one unit of
   value from an agent that is ahead by two or more to one behind) until no
   transfer applies, then complete the allocation by handing the leftover
   pool (zero marginal value for everyone) to a minimum-value agent.  The
   result simultaneously maximizes the p-mean welfare for every p <= 1
   under the positive-subset convention.
3. ``truncate`` — reduce every bundle worth more than one unit above the
   minimum down to that level, handing the removed goods to a minimum-value
   agent for whom they are worthless; the result is EQ1 and optimal among
   EQ1 allocations for every p.

Correctness of the search steps is gated end-to-end against the exhaustive
oracle in the test suite.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .model import (
    UNASSIGNED,
    Allocation,
    BinaryAdditive,
    Instance,
    is_eq1,
    make_clean,
)
from .welfare import PParam, WelfareReport, max_positive_count, poe_ratio, welfare_report


class SolverInternalError(RuntimeError):
    """An internal invariant failed; indicates a bug, not bad input."""


# ---------------------------------------------------------------------------
# Exchange-graph machinery
# ---------------------------------------------------------------------------


class _State:
    """Mutable clean partial allocation: per-agent independent bundles."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.owner = [UNASSIGNED] * inst.m
        self.bundles: list[set[int]] = [set() for _ in range(inst.n)]

    def values(self) -> list[int]:
        # bundles are kept independent, so value == size
        return [len(b) for b in self.bundles]

    def can_absorb(self, i: int, g: int) -> bool:
        val = self.inst.valuations[i]
        return val.value(self.bundles[i] | {g}) == len(self.bundles[i]) + 1

    def swap_ok(self, i: int, g_out: int, g_in: int) -> bool:
        val = self.inst.valuations[i]
        b = (self.bundles[i] - {g_out}) | {g_in}
        return val.value(b) == len(self.bundles[i])

    def _arcs_from(self, g: int) -> Iterable[int]:
        """Goods g' whose owner can release g' and take g instead."""
        for g2 in range(self.inst.m):
            j = self.owner[g2]
            if j == UNASSIGNED or g2 == g or self.owner[g] == j:
                continue
            if self.swap_ok(j, g2, g):
                yield g2

    def _bfs(self, sources: list[int], absorbers: Iterable[int]) -> tuple[list[int], int] | None:
        """Shortest path from any source good to a good some absorber can add.

        Returns (path of goods, absorbing agent) or None.  Along the path,
        each good's owner releases it and takes the preceding good; the
        final good is added to the absorber's bundle, for a net gain of one
        unit of value.  Shortest paths keep the simultaneous swaps valid.
        """
        absorbers = list(absorbers)
        parent: dict[int, int | None] = {}
        queue: deque[int] = deque()
        for g in sources:
            parent[g] = None
            queue.append(g)
        while queue:
            g = queue.popleft()
            for j in absorbers:
                if j != self.owner[g] and self.can_absorb(j, g):
                    path = [g]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path, j
            for g2 in self._arcs_from(g):
                if g2 not in parent:
                    parent[g2] = g
                    queue.append(g2)
        return None

    def apply_path(self, path: list[int], absorber: int) -> None:
        """Shift ownership along a path and absorb its last good.

        Every good on the path leaves its original holder; the holder of
        ``path[t]`` (t >= 1) takes ``path[t-1]`` in exchange, and the
        absorber adds ``path[-1]``.  The holder of ``path[0]`` (the pool,
        or the donating agent in a transfer) receives nothing.
        """
        orig_owner = [self.owner[g] for g in path]
        for g, j in zip(path, orig_owner):
            if j != UNASSIGNED:
                self.bundles[j].discard(g)
                self.owner[g] = UNASSIGNED
        for t in range(1, len(path)):
            j = orig_owner[t]
            self.bundles[j].add(path[t - 1])
            self.owner[path[t - 1]] = j
        self.bundles[absorber].add(path[-1])
        self.owner[path[-1]] = absorber
        self._check_clean()

    def _check_clean(self) -> None:
        for i, b in enumerate(self.bundles):
            if self.inst.valuations[i].value(b) != len(b):
                raise SolverInternalError("exchange path broke bundle independence")

    def to_allocation(self) -> Allocation:
        return Allocation(self.owner, self.inst.n)


def max_utilitarian_clean(inst: Instance) -> Allocation:
    """Clean partial allocation maximizing the total value.

    Repeatedly augments from the unassigned pool: a shortest exchange path
    moves one pool good into the allocation (possibly cascading swaps) and
    raises the total value by exactly one.  Stops when no pool good can be
    brought in, which is the matroid-partition optimality condition.
    """
    state = _State(inst)
    while True:
        pool = sorted(g for g in range(inst.m) if state.owner[g] == UNASSIGNED)
        found = state._bfs(pool, range(inst.n))
        if found is None:
            return state.to_allocation()
        path, absorber = found
        state.apply_path(path, absorber)


def _balance(state: _State) -> None:
    """Apply value-balancing transfer paths until none exists.

    A transfer path starts at a good owned by an agent whose value exceeds
    the target's by at least two, cascades swaps, and ends with the target
    absorbing one good: the source agent's value drops by one, the target's
    rises by one, everyone else is unchanged.
    """
    n = state.inst.n
    while True:
        values = state.values()
        applied = False
        for i in sorted(range(n), key=lambda a: (values[a], a)):
            rich = [j for j in range(n) if values[j] >= values[i] + 2]
            if not rich:
                continue
            sources = sorted(g for j in rich for g in state.bundles[j])
            found = state._bfs(sources, [i])
            if found is None:
                continue
            path, absorber = found
            donor = state.owner[path[0]]
            state.apply_path(path, absorber)
            new_values = state.values()
            if new_values[donor] != values[donor] - 1 or new_values[i] != values[i] + 1:
                raise SolverInternalError("transfer path did not move one unit of value")
            applied = True
            break
        if not applied:
            return


def _min_value_agent(values: list[int]) -> int:
    l = min(values)
    return min(i for i, v in enumerate(values) if v == l)


def nash_optimal(inst: Instance) -> Allocation:
    """Complete allocation maximizing Nash welfare under the positive-subset
    convention, hence the p-mean welfare for every p <= 1.

    Built as a clean utilitarian-optimal allocation, balanced by transfer
    paths, with the leftover pool (zero marginal value for every agent once
    no augmenting path remains) handed to the lowest-index minimum-value
    agent."""
    state = _State(inst)
    clean = max_utilitarian_clean(inst)
    state.owner = list(clean.owner)
    state.bundles = [set(b) for b in clean.bundles()]
    _balance(state)

    values = state.values()
    sink = _min_value_agent(values)
    for g in range(inst.m):
        if state.owner[g] == UNASSIGNED:
            if state.inst.valuations[sink].marginal(state.bundles[sink], g):
                raise SolverInternalError(
                    "pool good with positive marginal value: augmentation incomplete"
                )
            state.bundles[sink].add(g)
            state.owner[g] = sink
    return state.to_allocation()


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------


def truncate(inst: Instance, a_star: Allocation) -> Allocation:
    """EQ1 allocation obtained by trimming a Nash-optimal allocation.

    With ``l`` the minimum agent value, every bundle worth ``l + 2`` or more
    is reduced to exactly ``l + 1`` by removing value-carrying goods in
    ascending index order; the removed goods go to the lowest-index
    minimum-value agent, for whom Nash optimality forces their marginal
    value to be zero."""
    if not a_star.is_complete:
        raise ValueError("truncation requires a complete allocation")
    values = list(a_star.values(inst))
    l = min(values)
    i_l = _min_value_agent(values)
    sink_bundle = a_star.bundle(i_l)
    owner = list(a_star.owner)
    for i in range(inst.n):
        if values[i] < l + 2:
            continue
        val = inst.valuations[i]
        bundle = set(a_star.bundle(i))
        v = values[i]
        for g in sorted(a_star.bundle(i)):
            if v == l + 1:
                break
            if val.value(bundle - {g}) == v - 1:  # current marginal 1
                if inst.valuations[i_l].marginal(sink_bundle - {g}, g) != 0:
                    raise SolverInternalError(
                        "removed good has positive marginal value for the minimum-value "
                        "agent; input allocation was not Nash-optimal"
                    )
                bundle.discard(g)
                v -= 1
                owner[g] = i_l
        if v != l + 1:
            raise SolverInternalError("could not truncate bundle to the target value")
    b = Allocation(owner, inst.n)
    if not is_eq1(inst, b):
        raise SolverInternalError("truncated allocation is not EQ1")
    return b


# ---------------------------------------------------------------------------
# Type-level truncation diagnostics (binary additive only)
# ---------------------------------------------------------------------------


@dataclass
class TruncationDiagnostics:
    """Per-type goods/agents counts with the derived truncation level.

    Types are reindexed so goods-per-agent ratios are nondecreasing (ties by
    original type id).  ``truncation_level`` is the ceiling of the smallest
    ratio, bumped by one when the ratio is integral; ``retained_types`` is
    the number of leading types whose ratio it still covers, and
    ``retained_fraction`` the fraction of agents in those types.
    """

    type_order: list[int]  # original type ids, reindexed order
    goods_per_type: list[int]  # m_k, reindexed
    agents_per_type: list[int]  # n_k, reindexed
    truncation_level: int
    retained_types: int
    retained_fraction: Fraction
    warnings: list[str]

    def to_json(self) -> dict:
        return {
            "type_order": list(self.type_order),
            "goods_per_type": list(self.goods_per_type),
            "agents_per_type": list(self.agents_per_type),
            "truncation_level": self.truncation_level,
            "retained_types": self.retained_types,
            "retained_fraction": str(self.retained_fraction),
            "warnings": list(self.warnings),
        }


def diagnostics(inst: Instance, a_star: Allocation) -> TruncationDiagnostics:
    """Evaluate the type-level truncation quantities on a clean view of the
    optimal allocation.  Binary additive instances only."""
    if not all(isinstance(v, BinaryAdditive) for v in inst.valuations):
        raise ValueError("diagnostics are defined for binary additive instances")
    clean = make_clean(inst, a_star)
    type_of = inst.type_index
    r = inst.r
    goods = [0] * r
    agents = [0] * r
    for g, a in enumerate(clean.owner):
        if a != UNASSIGNED:
            goods[type_of[a]] += 1
    for i in range(inst.n):
        agents[type_of[i]] += 1

    order = sorted(range(r), key=lambda t: (Fraction(goods[t], agents[t]), t))
    m_k = [goods[t] for t in order]
    n_k = [agents[t] for t in order]

    ratio1 = Fraction(m_k[0], n_k[0])
    if ratio1.denominator == 1:
        level = int(ratio1) + 1
    else:
        level = -(-m_k[0] // n_k[0])  # ceil
    warnings = []
    if level < 2:
        warnings.append(
            f"truncation level {level} < 2: the leading type holds fewer goods than agents"
        )

    rho = max(k + 1 for k in range(r) if level >= Fraction(m_k[k], n_k[k]))
    alpha = Fraction(sum(n_k[:rho]), inst.n)
    return TruncationDiagnostics(
        type_order=order,
        goods_per_type=m_k,
        agents_per_type=n_k,
        truncation_level=level,
        retained_types=rho,
        retained_fraction=alpha,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


@dataclass
class SolveResult:
    a_star: Allocation
    b: Allocation
    min_value: int
    report_a_star: WelfareReport
    report_b: WelfareReport
    poe: dict[PParam, object]
    diagnostics: TruncationDiagnostics | None

    def to_json(self) -> dict:
        from .welfare import num_to_json

        return {
            "a_star": self.a_star.to_json(),
            "b": self.b.to_json(),
            "min_value": self.min_value,
            "welfare_optimal": self.report_a_star.to_json(),
            "welfare_eq1": self.report_b.to_json(),
            "poe": {str(p): num_to_json(v) for p, v in self.poe.items()},
            "diagnostics": self.diagnostics.to_json() if self.diagnostics else None,
        }


def solve(inst: Instance, p_list: Iterable[PParam]) -> SolveResult:
    """Compute the optimal allocation, the optimal EQ1 allocation, welfare
    reports for both, and the per-p price of equity."""
    p_list = list(p_list)
    restrict = max_positive_count(inst)
    a_star = nash_optimal(inst)
    b = truncate(inst, a_star)
    rep_a = welfare_report(inst, a_star, p_list, restrict=restrict)
    rep_b = welfare_report(inst, b, p_list, restrict=restrict)
    if rep_a.positive_count != restrict or rep_b.positive_count != restrict:
        raise SolverInternalError("optimal allocations missed the positive capacity")
    poe: dict[PParam, object] = {}
    for p in p_list:
        if restrict == 0:
            poe[p] = Fraction(1)
        else:
            poe[p] = poe_ratio(rep_a.keys[p], rep_b.keys[p], p, restrict)
    diag = None
    if all(isinstance(v, BinaryAdditive) for v in inst.valuations):
        diag = diagnostics(inst, a_star)
    return SolveResult(
        a_star=a_star,
        b=b,
        min_value=min(a_star.values(inst)),
        report_a_star=rep_a,
        report_b=rep_b,
        poe=poe,
        diagnostics=diag,
    )
