"""Instances, valuations, allocations, and fairness predicates.

Goods are integer indices ``0..m-1``.  Two valuation variants are supported:
binary additive (a 0/1 row over the goods) and GF(2) linear-matroid rank
(the value of a bundle is the GF(2) rank of its column vectors).  Both are
binary submodular by construction, with all marginal gains in {0, 1}.

Everything here is immutable after construction and safe to share between
concurrent workers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence


# ---------------------------------------------------------------------------
# GF(2) helpers (columns and rows are stored as Python int bitmasks)
# ---------------------------------------------------------------------------


def gf2_rank(masks: Iterable[int]) -> int:
    """Rank over GF(2) of a collection of bitmask vectors."""
    basis: list[int] = []
    rank = 0
    for v in masks:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
            rank += 1
    return rank


def gf2_rref(row_masks: Iterable[int]) -> tuple[int, ...]:
    """Reduced row-echelon form of a GF(2) matrix, rows as bitmasks.

    Zero rows are dropped; the result is a canonical basis of the row space
    (unique for a given row space), returned sorted by pivot position.
    Bit ``g`` of a row mask is the entry in column ``g``.
    """
    rows = [r for r in row_masks if r]
    pivots: list[tuple[int, int]] = []  # (pivot bit, row)
    for r in rows:
        for p, pr in pivots:
            if (r >> p) & 1:
                r ^= pr
        if r == 0:
            continue
        p = r.bit_length() - 1
        # eliminate the new pivot from earlier rows
        pivots = [(q, qr ^ r if (qr >> p) & 1 else qr) for q, qr in pivots]
        pivots.append((p, r))
    pivots.sort()
    return tuple(r for _, r in pivots)


# ---------------------------------------------------------------------------
# Valuations
# ---------------------------------------------------------------------------


class Valuation:
    """Rank-oracle interface: ``value(bundle)`` and ``marginal(bundle, g)``."""

    m: int
    kind: str

    def value(self, bundle: Iterable[int]) -> int:
        raise NotImplementedError

    def marginal(self, bundle: Iterable[int], g: int) -> int:
        """Marginal gain of adding ``g`` to ``bundle``; always 0 or 1."""
        bundle = frozenset(bundle)
        if g in bundle:
            raise ValueError(f"good {g} already in bundle")
        return self.value(bundle | {g}) - self.value(bundle)

    def canonical_key(self) -> tuple[int, ...]:
        """Representation-independent identity of the valuation function.

        Binary matroids are uniquely representable over GF(2) up to row
        operations, so the RREF of the representing matrix (rows as
        ``m``-bit masks) is a complete invariant.  Additive rows embed as
        the matroid with one standard basis column per valued good, so the
        key is comparable across variants.
        """
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "Valuation":
        kind = obj.get("kind")
        if kind == "additive":
            return BinaryAdditive(obj["row"])
        if kind == "matroid_gf2":
            return LinearMatroidGF2(obj["rows"], obj["cols"])
        raise ValueError(f"unknown valuation kind: {kind!r}")


class BinaryAdditive(Valuation):
    """Additive valuation with per-good values in {0, 1}."""

    kind = "additive"

    def __init__(self, row: Sequence[int]):
        row = tuple(int(x) for x in row)
        if any(x not in (0, 1) for x in row):
            raise ValueError("binary additive row must contain only 0/1 entries")
        self.row = row
        self.m = len(row)
        self.row_mask = sum(1 << g for g, x in enumerate(row) if x)

    def value(self, bundle: Iterable[int]) -> int:
        total = 0
        for g in set(bundle):
            if not 0 <= g < self.m:
                raise ValueError(f"good index {g} out of range")
            total += self.row[g]
        return total

    def marginal(self, bundle: Iterable[int], g: int) -> int:
        if g in set(bundle):
            raise ValueError(f"good {g} already in bundle")
        if not 0 <= g < self.m:
            raise ValueError(f"good index {g} out of range")
        return self.row[g]

    def canonical_key(self) -> tuple[int, ...]:
        return tuple(1 << g for g, x in enumerate(self.row) if x)

    def to_json(self) -> dict:
        return {"kind": "additive", "row": list(self.row)}

    def __repr__(self) -> str:
        return f"BinaryAdditive({list(self.row)})"


class LinearMatroidGF2(Valuation):
    """Matroid rank valuation given by a k x m matrix over GF(2).

    ``cols[g]`` is the length-``k`` 0/1 column of good ``g``; the value of a
    bundle is the GF(2) rank of its columns.
    """

    kind = "matroid_gf2"

    def __init__(self, rows: int, cols: Sequence[Sequence[int]]):
        if rows < 0:
            raise ValueError("row count must be non-negative")
        self.rows = rows
        self.m = len(cols)
        masks = []
        for col in cols:
            col = tuple(int(x) for x in col)
            if len(col) != rows:
                raise ValueError("column length does not match row count")
            if any(x not in (0, 1) for x in col):
                raise ValueError("matroid matrix entries must be 0/1")
            masks.append(sum(1 << j for j, x in enumerate(col) if x))
        self.col_masks = tuple(masks)

    def value(self, bundle: Iterable[int]) -> int:
        masks = []
        for g in set(bundle):
            if not 0 <= g < self.m:
                raise ValueError(f"good index {g} out of range")
            masks.append(self.col_masks[g])
        return gf2_rank(masks)

    def canonical_key(self) -> tuple[int, ...]:
        # Row g-bit view: row j of the matrix as an m-bit mask.
        row_masks = []
        for j in range(self.rows):
            r = 0
            for g, cm in enumerate(self.col_masks):
                if (cm >> j) & 1:
                    r |= 1 << g
            row_masks.append(r)
        return gf2_rref(row_masks)

    def to_json(self) -> dict:
        cols = [[(cm >> j) & 1 for j in range(self.rows)] for cm in self.col_masks]
        return {"kind": "matroid_gf2", "rows": self.rows, "cols": cols}

    def __repr__(self) -> str:
        return f"LinearMatroidGF2(rows={self.rows}, m={self.m})"


def subset_value_table(val: Valuation) -> list[int]:
    """Value of every bundle, indexed by good bitmask.  Requires m <= 16."""
    m = val.m
    if m > 16:
        raise ValueError("subset table limited to m <= 16")
    table = [0] * (1 << m)
    if isinstance(val, BinaryAdditive):
        for mask in range(1 << m):
            table[mask] = (mask & val.row_mask).bit_count()
        return table
    if isinstance(val, LinearMatroidGF2):
        # depth-first include/exclude with an incremental xor basis
        basis: list[int] = []

        def visit(g: int, mask: int, rank: int) -> None:
            table[mask] = rank
            for h in range(g, m):
                reduced = val.col_masks[h]
                for b in basis:
                    reduced = min(reduced, reduced ^ b)
                if reduced:
                    basis.append(reduced)
                    visit(h + 1, mask | (1 << h), rank + 1)
                    basis.pop()
                else:
                    visit(h + 1, mask | (1 << h), rank)

        visit(0, 0, 0)
    else:  # generic fallback for other rank oracles
        for mask in range(1 << m):
            table[mask] = val.value(g for g in range(m) if (mask >> g) & 1)
    return table


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """A fair-division instance: n agents, m goods, one valuation per agent."""

    valuations: tuple[Valuation, ...]

    def __init__(self, valuations: Sequence[Valuation]):
        valuations = tuple(valuations)
        if not valuations:
            raise ValueError("instance needs at least one agent")
        m = valuations[0].m
        if any(v.m != m for v in valuations):
            raise ValueError("all valuations must cover the same goods")
        object.__setattr__(self, "valuations", valuations)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return self.valuations[0].m

    @property
    def type_index(self) -> tuple[int, ...]:
        """Agent -> type id; agents with identical valuation functions share a type."""
        keys: dict[tuple, int] = {}
        out = []
        for v in self.valuations:
            k = v.canonical_key()
            if k not in keys:
                keys[k] = len(keys)
            out.append(keys[k])
        return tuple(out)

    @property
    def r(self) -> int:
        """Number of agent types."""
        return max(self.type_index) + 1

    def types(self) -> list[list[int]]:
        """Agents grouped by type id."""
        groups: list[list[int]] = [[] for _ in range(self.r)]
        for i, t in enumerate(self.type_index):
            groups[t].append(i)
        return groups

    def normalisation(self) -> int | None:
        """Common grand-bundle value W, or None if not normalised."""
        all_goods = range(self.m)
        totals = {v.value(all_goods) for v in self.valuations}
        return totals.pop() if len(totals) == 1 else None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "valuations": [v.to_json() for v in self.valuations],
        }

    @staticmethod
    def from_json(obj: dict) -> "Instance":
        vals = [Valuation.from_json(v) for v in obj["valuations"]]
        inst = Instance(vals)
        if "n" in obj and obj["n"] != inst.n:
            raise ValueError("declared agent count does not match valuations")
        if "m" in obj and obj["m"] != inst.m:
            raise ValueError("declared good count does not match valuations")
        return inst


# ---------------------------------------------------------------------------
# Allocation
# ---------------------------------------------------------------------------


UNASSIGNED = -1


@dataclass(frozen=True)
class Allocation:
    """Assignment of goods to agents; ``owner[g]`` is an agent index or -1."""

    owner: tuple[int, ...]
    n: int

    def __init__(self, owner: Sequence[int], n: int):
        owner = tuple(int(a) for a in owner)
        if any(a != UNASSIGNED and not 0 <= a < n for a in owner):
            raise ValueError("owner entries must be agent indices or -1")
        object.__setattr__(self, "owner", owner)
        object.__setattr__(self, "n", n)

    @staticmethod
    def from_bundles(bundles: Sequence[Iterable[int]], m: int) -> "Allocation":
        owner = [UNASSIGNED] * m
        for i, bundle in enumerate(bundles):
            for g in bundle:
                if owner[g] != UNASSIGNED:
                    raise ValueError(f"good {g} assigned twice")
                owner[g] = i
        return Allocation(owner, len(bundles))

    @property
    def m(self) -> int:
        return len(self.owner)

    @property
    def is_complete(self) -> bool:
        return UNASSIGNED not in self.owner

    def bundle(self, i: int) -> frozenset[int]:
        return frozenset(g for g, a in enumerate(self.owner) if a == i)

    def bundles(self) -> tuple[frozenset[int], ...]:
        sets: list[set[int]] = [set() for _ in range(self.n)]
        for g, a in enumerate(self.owner):
            if a != UNASSIGNED:
                sets[a].add(g)
        return tuple(frozenset(s) for s in sets)

    def unassigned(self) -> frozenset[int]:
        return frozenset(g for g, a in enumerate(self.owner) if a == UNASSIGNED)

    def values(self, inst: Instance) -> tuple[int, ...]:
        """Per-agent bundle values."""
        return tuple(inst.valuations[i].value(b) for i, b in enumerate(self.bundles()))

    def to_json(self) -> dict:
        return {"owner": list(self.owner)}

    @staticmethod
    def from_json(obj: dict, n: int) -> "Allocation":
        return Allocation(obj["owner"], n)


# ---------------------------------------------------------------------------
# Fairness and efficiency predicates
# ---------------------------------------------------------------------------


def _require_complete(alloc: Allocation) -> None:
    if not alloc.is_complete:
        raise ValueError("predicate requires a complete allocation")


def _reduced_value(val: Valuation, bundle: frozenset[int]) -> int:
    """min over g in bundle of value(bundle - {g}); bundle must be nonempty."""
    full = val.value(bundle)
    best = full
    for g in sorted(bundle):
        v = val.value(bundle - {g})
        if v < best:
            best = v
            break  # binary marginals: can only drop by 1
    return best


def is_eq1(inst: Instance, alloc: Allocation) -> bool:
    """Equitable up to one good: for every pair (i, k) with k's bundle
    nonempty, some good of k can be dropped so that i's value for its own
    bundle is at least k's value for the reduced bundle."""
    _require_complete(alloc)
    bundles = alloc.bundles()
    values = [inst.valuations[i].value(b) for i, b in enumerate(bundles)]
    if inst.n <= 1:
        return True
    vmin = min(values)
    for k in range(inst.n):
        if not bundles[k]:
            continue
        if _reduced_value(inst.valuations[k], bundles[k]) > vmin:
            return False
    return True


def is_eq(inst: Instance, alloc: Allocation) -> bool:
    """Equitable: all agents value their own bundles equally."""
    _require_complete(alloc)
    return len(set(alloc.values(inst))) <= 1


def is_ef(inst: Instance, alloc: Allocation) -> bool:
    """Envy-free: no agent values another's bundle above its own."""
    _require_complete(alloc)
    bundles = alloc.bundles()
    for i in range(inst.n):
        vi = inst.valuations[i].value(bundles[i])
        for k in range(inst.n):
            if k != i and inst.valuations[i].value(bundles[k]) > vi:
                return False
    return True


def is_ef1(inst: Instance, alloc: Allocation) -> bool:
    """Envy-free up to one good, with the envious agent's own valuation
    applied to the reduced bundle."""
    _require_complete(alloc)
    bundles = alloc.bundles()
    for i in range(inst.n):
        vi = inst.valuations[i].value(bundles[i])
        for k in range(inst.n):
            if k == i or not bundles[k]:
                continue
            if _reduced_value(inst.valuations[i], bundles[k]) > vi:
                return False
    return True


def wasted_goods(inst: Instance, alloc: Allocation) -> frozenset[int]:
    """Goods whose removal leaves their owner's value unchanged.

    Scans assigned goods in ascending index; a good reported wasted is
    dropped from the working bundle before later goods are tested, so the
    result is exactly the set ``make_clean`` removes.  An allocation is
    clean iff the result is empty.
    """
    removed: set[int] = set()
    work = [set(b) for b in alloc.bundles()]
    for g in range(alloc.m):
        i = alloc.owner[g]
        if i == UNASSIGNED:
            continue
        val = inst.valuations[i]
        if val.value(work[i]) == val.value(work[i] - {g}):
            removed.add(g)
            work[i].discard(g)
    return frozenset(removed)


def is_clean(inst: Instance, alloc: Allocation) -> bool:
    return not wasted_goods(inst, alloc)


def make_clean(inst: Instance, alloc: Allocation) -> Allocation:
    """Move wasted goods to the unassigned pool; per-agent values are
    preserved, and for matroid valuations the cleaned bundles satisfy
    ``|bundle| == value(bundle)``."""
    owner = list(alloc.owner)
    for g in sorted(wasted_goods(inst, alloc)):
        owner[g] = UNASSIGNED
    return Allocation(owner, alloc.n)


# ---------------------------------------------------------------------------
# Instance validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    W: int | None
    r: int
    warnings: list[str] = field(default_factory=list)
    binary_submodular: bool = True

    @property
    def normalised(self) -> bool:
        return self.W is not None

    def to_json(self) -> dict:
        return {
            "W": self.W if self.W is not None else "not normalised",
            "r": self.r,
            "warnings": list(self.warnings),
            "binary_submodular": self.binary_submodular,
        }


def _check_binary_submodular(val: Valuation, rng: random.Random) -> bool:
    """Monotone with binary marginals and submodular.

    Exhaustive over all bundles for m <= 12 (via the subset table and the
    local pairwise condition), randomized over 10,000 (S subset of S', g)
    triples otherwise.
    """
    m = val.m
    if m <= 12:
        table = subset_value_table(val)
        for mask in range(1 << m):
            v = table[mask]
            outside = [g for g in range(m) if not (mask >> g) & 1]
            for g in outside:
                gain = table[mask | (1 << g)] - v
                if gain not in (0, 1):
                    return False
            for a in range(len(outside)):
                for b in range(a + 1, len(outside)):
                    ga, gb = outside[a], outside[b]
                    lhs = table[mask | (1 << ga)] + table[mask | (1 << gb)]
                    if lhs < table[mask | (1 << ga) | (1 << gb)] + v:
                        return False
        return True
    for _ in range(10_000):
        sup = [g for g in range(m) if rng.random() < 0.5]
        sub = [g for g in sup if rng.random() < 0.5]
        rest = [g for g in range(m) if g not in set(sup)]
        if not rest:
            continue
        g = rng.choice(rest)
        lo = val.marginal(sub, g)
        hi = val.marginal(sup, g)
        if lo not in (0, 1) or hi not in (0, 1) or lo < hi:
            return False
    return True


def validate(inst: Instance) -> ValidationReport:
    """Report the normalisation constant, agent-type count, unvalued goods,
    and the binary-submodularity check result."""
    rng = random.Random(0xBEEF)
    ok = all(_check_binary_submodular(v, rng) for v in inst.valuations)
    if not ok:
        raise ValueError("valuation is not binary submodular")
    report = ValidationReport(W=inst.normalisation(), r=inst.r)
    unvalued = [
        g
        for g in range(inst.m)
        if all(v.value([g]) == 0 for v in inst.valuations)
    ]
    for g in unvalued:
        report.warnings.append(f"good {g} valued by no agent")
    return report
