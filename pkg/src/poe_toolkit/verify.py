"""Self-contained verification gates: solver output against the exhaustive
oracle and against the closed-form guarantees, on a seeded corpus plus the
named fixtures.  Used by the command-line ``verify`` subcommand; the test
suite runs the same gates at larger corpus sizes.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .bounds import rank_of_instance
from .generators import (
    biregular_parameter_choices,
    example1_instance,
    gen_doubly_normalised,
    gen_lower_bound_instance,
    gen_submodular_lb_instance,
    random_binary_additive,
    random_matroid_gf2,
    remark_3x4_instance,
)
from .model import Instance, wasted_goods
from .oracle import enumerate_allocations
from .solver import solve
from .welfare import NASH, NEG_INF, PParam, UTILITARIAN

GATE_P_LIST = (UTILITARIAN, PParam.real(Fraction(1, 2)), NASH, PParam.real(-1), NEG_INF)
EXACT_P = (UTILITARIAN, NASH, NEG_INF)
FLOAT_TOL = 1e-9


@dataclass
class GateResult:
    name: str
    passed: bool
    cases: int
    seconds: float
    detail: str = ""


@dataclass
class VerifyReport:
    gates: list[GateResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)


def _keys_match(key_a, key_b, p: PParam) -> bool:
    (c1, w1), (c2, w2) = key_a, key_b
    if c1 != c2:
        return False
    if p in EXACT_P:
        return w1 == w2
    return math.isclose(float(w1), float(w2), rel_tol=FLOAT_TOL, abs_tol=FLOAT_TOL)


def oracle_corpus(seed: int, count: int) -> list[Instance]:
    """Seeded mix of small additive and matroid instances (n <= 4, m <= 8)."""
    rng = random.Random(seed)
    out: list[Instance] = []
    while len(out) < count:
        n = rng.randint(2, 4)
        m = rng.randint(2, 8)
        style = rng.randrange(4)
        if style == 0:
            out.append(random_binary_additive(rng, n, m))
        elif style == 1:
            W = rng.randint(1, m)
            out.append(random_binary_additive(rng, n, m, W=W))
        elif style == 2:
            out.append(random_matroid_gf2(rng, n, m))
        else:
            out.append(random_matroid_gf2(rng, n, m, W=rng.randint(1, min(4, m))))
    return out


def fixture_instances() -> list[Instance]:
    return [
        gen_lower_bound_instance(2, 2),
        gen_lower_bound_instance(3, 2),
        gen_submodular_lb_instance(2),
        example1_instance(),
        remark_3x4_instance(),
    ]


def gate_optimal_allocations(instances, budget: int) -> GateResult:
    """Solver A* and B attain the oracle-optimal keys for every p; when the
    optimal values are within one of each other, the sorted A* vector is
    the oracle leximin vector."""
    start = time.perf_counter()
    failures = []
    for idx, inst in enumerate(instances):
        res = solve(inst, GATE_P_LIST)
        orc = enumerate_allocations(inst, GATE_P_LIST, budget=budget)
        for p in GATE_P_LIST:
            if not _keys_match(res.report_a_star.keys[p], orc.best_key[p], p):
                failures.append(f"instance {idx}: optimal key mismatch at p={p}")
            if not _keys_match(res.report_b.keys[p], orc.best_eq1_key[p], p):
                failures.append(f"instance {idx}: EQ1 key mismatch at p={p}")
        values = res.a_star.values(inst)
        positives = [v for v in values if v > 0]
        if positives and max(positives) - min(positives) <= 1:
            if tuple(sorted(values)) != orc.leximin:
                failures.append(f"instance {idx}: near-equal optimum is not leximin")
    return GateResult(
        name="oracle-optimality",
        passed=not failures,
        cases=len(instances),
        seconds=time.perf_counter() - start,
        detail="; ".join(failures[:5]),
    )


def gate_rank_bound(seed: int, count: int) -> GateResult:
    """Utilitarian price of equity <= instance rank, and the wasted-good
    count of B is at most m(1 - 1/rank), on normalised additive instances
    with every good valued."""
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    done = 0
    while done < count:
        n = rng.randint(2, 6)
        m = rng.randint(2, 12)
        W = rng.randint(max(1, -(-m // n)), m)
        inst = random_binary_additive(rng, n, m, W=W, every_good_valued=True)
        done += 1
        rank = rank_of_instance(inst)
        res = solve(inst, [UTILITARIAN])
        poe = res.poe[UTILITARIAN]
        if poe > rank:
            failures.append(f"case {done}: PoE {poe} > rank {rank}")
        waste = len(wasted_goods(inst, res.b))
        if Fraction(waste) > Fraction(m) * (1 - Fraction(1, rank)):
            failures.append(f"case {done}: {waste} wasted goods exceed the rank bound")
    return GateResult(
        name="rank-bound",
        passed=not failures,
        cases=done,
        seconds=time.perf_counter() - start,
        detail="; ".join(failures[:5]),
    )


def gate_matroid_floor(seed: int, count: int) -> GateResult:
    """On normalised matroid instances, every positive-value agent in B has
    value >= W/(2n), and the price of equity is at most 2n for p in
    {1, nash, -1}."""
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    insts = [gen_submodular_lb_instance(k) for k in (2, 3, 4)]
    while len(insts) < count:
        n = rng.randint(2, 6)
        m = rng.randint(2, 10)
        insts.append(random_matroid_gf2(rng, n, m, W=rng.randint(1, min(5, m))))
    p_check = (UTILITARIAN, NASH, PParam.real(-1))
    for idx, inst in enumerate(insts):
        W = inst.normalisation()
        res = solve(inst, p_check)
        floor = Fraction(W, 2 * inst.n)
        for v in res.b.values(inst):
            if v > 0 and v < floor:
                failures.append(f"case {idx}: positive value {v} below floor {floor}")
        for p in p_check:
            poe = res.poe[p]
            bound = 2 * inst.n
            ok = poe <= bound if isinstance(poe, Fraction) else float(poe) <= bound + FLOAT_TOL
            if not ok:
                failures.append(f"case {idx}: PoE {poe} above 2n at p={p}")
    return GateResult(
        name="matroid-floor",
        passed=not failures,
        cases=len(insts),
        seconds=time.perf_counter() - start,
        detail="; ".join(failures[:5]),
    )


def gate_doubly(seed: int, count: int) -> GateResult:
    """On biregular instances the price of equity is exactly 1 for p = 1
    and Nash."""
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    insts = [example1_instance()]
    while len(insts) < count:
        n = rng.randint(2, 10)
        m = rng.randint(2, 12)
        choices = biregular_parameter_choices(n, m)
        if not choices:
            continue
        W, W_c = rng.choice(choices)
        insts.append(gen_doubly_normalised(n, m, W, W_c, seed=rng.randrange(1 << 30)))
    for idx, inst in enumerate(insts):
        res = solve(inst, (UTILITARIAN, NASH))
        for p in (UTILITARIAN, NASH):
            if res.poe[p] != 1:
                failures.append(f"case {idx}: PoE {res.poe[p]} != 1 at p={p}")
    return GateResult(
        name="doubly-normalised",
        passed=not failures,
        cases=len(insts),
        seconds=time.perf_counter() - start,
        detail="; ".join(failures[:5]),
    )


def gate_self_test(budget: int) -> GateResult:
    """Swap two goods of the truncated allocation so it stops being EQ1,
    then run the EQ1-optimality check on the corrupted allocation.

    The gate is expected to FAIL: a failing result here means the check
    works; a passing one means the corruption went undetected."""
    from .model import Allocation, is_eq1
    from .welfare import welfare_key

    start = time.perf_counter()
    inst = gen_lower_bound_instance(2, 2)
    res = solve(inst, [UTILITARIAN])
    orc = enumerate_allocations(inst, [UTILITARIAN], budget=budget)
    owner = list(res.b.owner)
    corrupted = None
    for g in range(inst.m):
        for h in range(inst.m):
            if g != h and owner[g] != owner[h]:
                trial = list(owner)
                trial[h] = trial[g]
                cand = Allocation(trial, inst.n)
                if not is_eq1(inst, cand):
                    corrupted = cand
                    break
        if corrupted:
            break
    if corrupted is None:
        raise RuntimeError("self-test harness could not corrupt the allocation")
    key = welfare_key(corrupted.values(inst), UTILITARIAN, orc.restrict)
    still_valid = is_eq1(inst, corrupted) and _keys_match(
        key, orc.best_eq1_key[UTILITARIAN], UTILITARIAN
    )
    return GateResult(
        name="self-test(corrupted-B)",
        passed=still_valid,
        cases=1,
        seconds=time.perf_counter() - start,
        detail="injected corruption detected (expected failure)"
        if not still_valid
        else "injected corruption went undetected",
    )


def run_verification(
    budget: int = 10_000_000,
    seed: int = 20240,
    oracle_cases: int = 60,
    rank_cases: int = 80,
    matroid_cases: int = 40,
    doubly_cases: int = 40,
    self_test: bool = False,
) -> VerifyReport:
    report = VerifyReport()
    instances = oracle_corpus(seed, oracle_cases) + fixture_instances()
    report.gates.append(gate_optimal_allocations(instances, budget))
    report.gates.append(gate_rank_bound(seed + 1, rank_cases))
    report.gates.append(gate_matroid_floor(seed + 2, matroid_cases))
    report.gates.append(gate_doubly(seed + 3, doubly_cases))
    if self_test:
        report.gates.append(gate_self_test(budget))
    return report
