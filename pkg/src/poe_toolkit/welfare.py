"""Generalized p-mean welfare with the positive-subset convention.

When some agents are bound to receive zero value, welfare is evaluated over
a largest subset of agents that can simultaneously get positive value; the
size of that subset is the instance's *positive capacity* (a maximum
bipartite matching between agents and the goods they value).  Allocations
are ranked by the lexicographic key (number of positive agents, welfare
over positive agents), with exact arithmetic for p = 1, Nash, and the
egalitarian limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import Allocation, Instance


# ---------------------------------------------------------------------------
# Welfare parameter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PParam:
    """Exponent of the p-mean: an exact rational p <= 1, Nash (the p -> 0
    limit), or the egalitarian p -> -infinity limit.  The two limits are
    explicit variants, never numeric approximations."""

    kind: str  # "real" | "nash" | "neg_inf"
    value: Fraction | None = None

    @staticmethod
    def real(p) -> "PParam":
        p = Fraction(p)
        if p > 1:
            raise ValueError("p-mean welfare is only defined here for p <= 1")
        if p == 0:
            return NASH
        return PParam("real", p)

    @staticmethod
    def parse(token: str) -> "PParam":
        token = token.strip().lower()
        if token == "nash":
            return NASH
        if token in ("-inf", "-infinity", "egal"):
            return NEG_INF
        return PParam.real(Fraction(token))

    @property
    def is_utilitarian(self) -> bool:
        return self.kind == "real" and self.value == 1

    def __str__(self) -> str:
        if self.kind == "real":
            return str(self.value)
        return "nash" if self.kind == "nash" else "-inf"

    def __repr__(self) -> str:
        return f"PParam({self})"


NASH = PParam("nash")
NEG_INF = PParam("neg_inf")
UTILITARIAN = PParam("real", Fraction(1))


# ---------------------------------------------------------------------------
# Positive capacity
# ---------------------------------------------------------------------------


def max_positive_count(inst: Instance) -> int:
    """Maximum number of agents that can simultaneously get positive value.

    Equals the size of a maximum matching in the agent-good bipartite graph
    with an edge whenever the agent values the good on its own (under unit
    marginals, one singleton-valued good is exactly what positivity takes).
    """
    adj = [
        [g for g in range(inst.m) if inst.valuations[i].value([g]) == 1]
        for i in range(inst.n)
    ]
    match_good: dict[int, int] = {}

    def augment(i: int, seen: set[int]) -> bool:
        for g in adj[i]:
            if g in seen:
                continue
            seen.add(g)
            if g not in match_good or augment(match_good[g], seen):
                match_good[g] = i
                return True
        return False

    count = 0
    for i in range(inst.n):
        if augment(i, set()):
            count += 1
    return count


# ---------------------------------------------------------------------------
# p-mean evaluation and comparison keys
# ---------------------------------------------------------------------------


def p_mean(values: Sequence, p: PParam, restrict: int | None = None):
    """Generalized p-mean of a value vector.

    With ``restrict`` given (the instance's positive capacity), the mean is
    taken over a size-``restrict`` agent subset containing every positive
    entry, per the positive-subset convention; vectors with fewer positive
    entries than ``restrict`` are *dominated* and evaluate with the implied
    zeros (which makes them 0 for p <= 0).  Without ``restrict``, the plain
    mean over all entries is returned.

    Returns an exact Fraction for p = 1 on rational inputs, an exact
    integer/Fraction for the egalitarian limit, and a float otherwise.
    """
    if restrict is None:
        entries = sorted(values)
        denom = len(entries)
    else:
        entries = sorted(v for v in values if v > 0)
        denom = restrict
    if denom == 0:
        return Fraction(0)
    short = len(entries) < denom  # implied zero entries

    if p.kind == "neg_inf":
        if short:
            return Fraction(0)
        return min(entries)
    if p.kind == "nash":
        if short or any(v == 0 for v in entries):
            return 0.0
        return math.exp(sum(math.log(v) for v in entries) / denom)
    assert p.value is not None
    if p.value == 1:
        total = sum(entries)
        if isinstance(total, float):
            return total / denom
        return Fraction(total, denom)
    pf = float(p.value)
    if pf < 0 and (short or any(v == 0 for v in entries)):
        return 0.0
    acc = sum(float(v) ** pf for v in entries if v > 0)
    if acc == 0.0:
        return 0.0
    return (acc / denom) ** (1.0 / pf)


def welfare_key(values: Sequence[int], p: PParam, restrict: int):
    """Total-preorder comparison key: (positive count, welfare).

    The welfare component is exact for p = 1 (rational mean), Nash (the
    integer product over positive entries), and the egalitarian limit (the
    minimum positive entry); it is a float for other p.  Keys are only
    comparable for a fixed p and restrict.
    """
    positives = [v for v in values if v > 0]
    count = len(positives)
    if count < restrict:
        if p.kind == "nash":
            second = math.prod(positives) if positives else 0
        elif p.kind == "neg_inf":
            second = 0
        else:
            second = p_mean(values, p, restrict)
        return (count, second)
    if p.kind == "nash":
        return (count, math.prod(positives))
    if p.kind == "neg_inf":
        return (count, min(positives) if positives else 0)
    return (count, p_mean(values, p, restrict))


def poe_ratio(key_opt, key_fair, p: PParam, restrict: int):
    """Welfare ratio of two comparison keys for the same p and restrict.

    Exact Fraction when both welfare components are exact and the ratio is
    rational (always for p = 1 and the egalitarian limit, and whenever the
    keys coincide); float otherwise.
    """
    (c1, w1), (c2, w2) = key_opt, key_fair
    if (c1, w1) == (c2, w2):
        return Fraction(1)
    if c2 == 0 or w2 == 0:
        raise ZeroDivisionError("fair optimum has zero welfare")
    if p.kind == "nash":
        if c1 != c2:
            raise ValueError("Nash ratio undefined across positive counts")
        return float(Fraction(w1, w2)) ** (1.0 / restrict)
    if p.kind == "neg_inf" or (p.kind == "real" and p.value == 1):
        return Fraction(w1) / Fraction(w2)
    return float(w1) / float(w2)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class WelfareReport:
    values: tuple[int, ...]
    positive_count: int
    restrict: int
    pmean: dict[PParam, object]
    keys: dict[PParam, tuple]

    def to_json(self) -> dict:
        return {
            "values": list(self.values),
            "positive_count": self.positive_count,
            "restrict": self.restrict,
            "pmean": {str(p): num_to_json(v) for p, v in self.pmean.items()},
        }


def num_to_json(v):
    """JSON form of a welfare number: Fractions as "a/b" strings, floats as-is."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return v
    return int(v)


def welfare_report(
    inst: Instance, alloc: Allocation, p_list: Iterable[PParam],
    restrict: int | None = None,
) -> WelfareReport:
    """Per-agent values plus the p-mean and comparison key for each p."""
    if not alloc.is_complete:
        raise ValueError("welfare report requires a complete allocation")
    if restrict is None:
        restrict = max_positive_count(inst)
    values = alloc.values(inst)
    p_list = list(p_list)
    return WelfareReport(
        values=values,
        positive_count=sum(1 for v in values if v > 0),
        restrict=restrict,
        pmean={p: p_mean(values, p, restrict) for p in p_list},
        keys={p: welfare_key(values, p, restrict) for p in p_list},
    )
