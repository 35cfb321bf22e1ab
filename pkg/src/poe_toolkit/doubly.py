"""Price-of-equity-1 pipelines for doubly normalised instances.

Two independent routes produce welfare-optimal EQ1 allocations when every
agent values exactly W goods and every good is valued by exactly W_c
agents:

* an integral flow with degree lower bounds (every good to an agent that
  values it, every agent getting floor(W/W_c) or ceil(W/W_c) goods), and
* a simultaneous-eating construction whose fractional outcome is an exactly
  doubly stochastic matrix, decomposed into permutation matrices and decoded
  back into allocations.

Everything here is exact rational arithmetic; no tolerances anywhere.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Allocation, BinaryAdditive, Instance


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


def is_doubly_normalised(inst: Instance) -> tuple[int, int] | None:
    """Return (W, W_c) when all row sums equal W and all column sums equal
    W_c; None otherwise.  Binary additive instances only."""
    if not all(isinstance(v, BinaryAdditive) for v in inst.valuations):
        raise ValueError("double normalisation is defined for binary additive instances")
    row_sums = {sum(v.row) for v in inst.valuations}
    if len(row_sums) != 1:
        return None
    col_sums = {
        sum(v.row[g] for v in inst.valuations) for g in range(inst.m)
    }
    if len(col_sums) != 1:
        return None
    return (row_sums.pop(), col_sums.pop())


# ---------------------------------------------------------------------------
# Max flow (Dinic); integer capacities, deterministic
# ---------------------------------------------------------------------------


class _MaxFlow:
    def __init__(self, size: int):
        self.size = size
        self.adj: list[list[int]] = [[] for _ in range(size)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        """Add a directed edge; returns its id (the reverse edge is id ^ 1)."""
        eid = len(self.to)
        self.adj[u].append(eid)
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(eid + 1)
        self.to.append(u)
        self.cap.append(0)
        return eid

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.size
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for eid in self.adj[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _push(self, u: int, t: int, limit: int, level: list[int], it: list[int]) -> int:
        if u == t:
            return limit
        while it[u] < len(self.adj[u]):
            eid = self.adj[u][it[u]]
            v = self.to[eid]
            if self.cap[eid] > 0 and level[v] == level[u] + 1:
                pushed = self._push(v, t, min(limit, self.cap[eid]), level, it)
                if pushed:
                    self.cap[eid] -= pushed
                    self.cap[eid ^ 1] += pushed
                    return pushed
            it[u] += 1
        return 0

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.size
            while True:
                pushed = self._push(s, t, 1 << 60, level, it)
                if not pushed:
                    break
                total += pushed

    def flow_on(self, eid: int) -> int:
        return self.cap[eid ^ 1]

    def residual_reachable(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for eid in self.adj[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


# ---------------------------------------------------------------------------
# q-expansions
# ---------------------------------------------------------------------------


@dataclass
class QExpansion:
    """Either an expansion (each agent incident to exactly q chosen edges,
    all chosen goods distinct) or an expansion-blocking agent set X with
    fewer than q|X| neighbours."""

    edges: list[tuple[int, int]] | None
    violating_agents: frozenset[int] | None

    @property
    def exists(self) -> bool:
        return self.edges is not None


def q_expansion(inst: Instance, q: int) -> QExpansion:
    """Find a q-expansion from agents to singly-valued goods via integral
    max flow, or extract a neighbourhood-deficient agent set from the min
    cut."""
    if q < 1:
        raise ValueError("q must be >= 1")
    n, m = inst.n, inst.m
    s, t = n + m, n + m + 1
    net = _MaxFlow(n + m + 2)
    for i in range(n):
        net.add_edge(s, i, q)
    big = q * n + 1
    pair_edges: dict[int, tuple[int, int]] = {}
    for i in range(n):
        for g in range(m):
            if inst.valuations[i].value([g]) == 1:
                pair_edges[net.add_edge(i, n + g, big)] = (i, g)
    for g in range(m):
        net.add_edge(n + g, t, 1)
    flow = net.max_flow(s, t)
    if flow == q * n:
        edges = sorted(pair for eid, pair in pair_edges.items() if net.flow_on(eid) > 0)
        return QExpansion(edges=edges, violating_agents=None)
    reach = net.residual_reachable(s)
    violating = frozenset(i for i in range(n) if i in reach)
    return QExpansion(edges=None, violating_agents=violating)


# ---------------------------------------------------------------------------
# Integral flow route
# ---------------------------------------------------------------------------


def solve_flow(inst: Instance) -> Allocation:
    """Welfare-optimal EQ1 allocation for a doubly normalised instance.

    Every good goes to an agent that values it, and every agent receives
    floor(W/W_c) or ceil(W/W_c) goods.  Realized as an integral flow in two
    phases: saturate the per-agent lower bounds first, then route the
    remaining goods under the upper bounds (augmentation never pushes an
    agent back below its saturated lower bound)."""
    dn = is_doubly_normalised(inst)
    if dn is None:
        raise ValueError("instance is not doubly normalised")
    W, W_c = dn
    lo, hi = W // W_c, -(-W // W_c)
    n, m = inst.n, inst.m
    s, t = n + m, n + m + 1
    net = _MaxFlow(n + m + 2)
    agent_edges = [net.add_edge(s, i, lo) for i in range(n)]
    pair_edges: dict[int, tuple[int, int]] = {}
    for i in range(n):
        for g in range(m):
            if inst.valuations[i].row[g] == 1:
                pair_edges[net.add_edge(i, n + g, 1)] = (i, g)
    for g in range(m):
        net.add_edge(n + g, t, 1)
    if net.max_flow(s, t) != n * lo:
        raise RuntimeError("internal: lower bounds infeasible on a doubly normalised instance")
    for eid in agent_edges:
        net.cap[eid] += hi - lo
    total = n * lo + net.max_flow(s, t)
    if total != m:
        raise RuntimeError("internal: flow failed to place every good")
    owner = [-1] * m
    for eid, (i, g) in pair_edges.items():
        if net.flow_on(eid) > 0:
            owner[g] = i
    return Allocation(owner, n)


# ---------------------------------------------------------------------------
# Eating construction
# ---------------------------------------------------------------------------


@dataclass
class DoublyStochasticMatrix:
    """Square matrix of exact rationals with all row and column sums 1."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __init__(self, entries: Sequence[Sequence[Fraction]]):
        rows = tuple(tuple(Fraction(x) for x in row) for row in entries)
        dim = len(rows)
        if any(len(row) != dim for row in rows):
            raise ValueError("matrix must be square")
        for row in rows:
            if any(x < 0 for x in row):
                raise ValueError("entries must be non-negative")
            if sum(row) != 1:
                raise ValueError("every row must sum to exactly 1")
        for c in range(dim):
            if sum(row[c] for row in rows) != 1:
                raise ValueError("every column must sum to exactly 1")
        object.__setattr__(self, "entries", rows)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, rc: tuple[int, int]) -> Fraction:
        return self.entries[rc[0]][rc[1]]


@dataclass
class EatingMatrix:
    """Fractional outcome of the simultaneous-eating construction.

    Rows are agent copies (agent-major: copies of agent i occupy rows
    i*(copies)..i*(copies)+copies-1); columns are the m real goods in
    instance order followed by dummy goods that everyone values at zero.
    """

    matrix: DoublyStochasticMatrix
    copies: int  # p + 1, where W = p * W_c + q with 0 < q < W_c
    n: int
    m: int
    W: int
    W_c: int

    @property
    def dummies(self) -> int:
        return self.matrix.dim - self.m

    def row_agent(self, row: int) -> int:
        return row // self.copies

    def to_csv(self) -> str:
        lines = []
        for row in self.matrix.entries:
            lines.append(",".join(str(x) for x in row))
        return "\n".join(lines) + "\n"


def eating_matrix(inst: Instance) -> EatingMatrix:
    """Closed-form eating outcome for a doubly normalised instance with
    W = p * W_c + q, q != 0 (the q = 0 case is the flow route).

    Each of the first p copies of an agent eats 1/W of every liked good;
    the last copy eats q/(W*W_c) of every liked good plus an equal share
    (1 - q/W_c)/t of each of the t dummy goods."""
    dn = is_doubly_normalised(inst)
    if dn is None:
        raise ValueError("instance is not doubly normalised")
    W, W_c = dn
    p, q = divmod(W, W_c)
    if q == 0:
        raise ValueError("W divisible by W_c: use the flow route, not the eating route")
    n, m = inst.n, inst.m
    copies = p + 1
    dim = copies * n
    t = dim - m
    share_early = Fraction(1, W)
    share_last = Fraction(q, W * W_c)
    share_dummy = (1 - Fraction(q, W_c)) / t
    entries = []
    for i in range(n):
        liked = [g for g in range(m) if inst.valuations[i].row[g] == 1]
        for j in range(copies):
            row = [Fraction(0)] * dim
            frac = share_early if j < p else share_last
            for g in liked:
                row[g] = frac
            if j == p:
                for d in range(m, dim):
                    row[d] = share_dummy
            entries.append(row)
    return EatingMatrix(
        matrix=DoublyStochasticMatrix(entries),
        copies=copies,
        n=n,
        m=m,
        W=W,
        W_c=W_c,
    )


# ---------------------------------------------------------------------------
# Birkhoff-von Neumann decomposition
# ---------------------------------------------------------------------------


@dataclass
class BvnDecomposition:
    """Exact convex combination of permutation matrices.

    ``terms`` is a list of (weight, perm) with positive rational weights
    summing to exactly 1 and ``perm[row] = col``; the weighted sum of the
    permutation matrices reproduces the source matrix entrywise.
    """

    terms: list[tuple[Fraction, tuple[int, ...]]]

    def weights(self) -> list[Fraction]:
        return [w for w, _ in self.terms]


def _augment_support(
    work: list[list[Fraction]], r: int, row_match: list[int],
    col_match: list[int], seen: set[int],
) -> bool:
    for c in range(len(work)):
        if work[r][c] > 0 and c not in seen:
            seen.add(c)
            if col_match[c] < 0 or _augment_support(work, col_match[c], row_match, col_match, seen):
                row_match[r] = c
                col_match[c] = r
                return True
    return False


def bvn_decompose(Y: DoublyStochasticMatrix) -> BvnDecomposition:
    """Decompose a doubly stochastic matrix into permutation matrices.

    Iterates perfect matchings on the positive-support bipartite graph,
    subtracting the minimum matched entry each round (which zeroes at least
    one entry, so at most dim^2 - 2*dim + 2 terms are produced).  The
    decomposition is deterministic but not unique; the contract is exact
    reconstruction, not any particular term list."""
    dim = Y.dim
    work = [list(row) for row in Y.entries]
    row_match = [-1] * dim
    col_match = [-1] * dim
    terms: list[tuple[Fraction, tuple[int, ...]]] = []
    remaining = Fraction(1)
    while remaining > 0:
        for r in range(dim):
            if row_match[r] < 0 and not _augment_support(work, r, row_match, col_match, set()):
                raise RuntimeError("internal: support has no perfect matching; "
                                   "input was not doubly stochastic")
        delta = min(work[r][row_match[r]] for r in range(dim))
        perm = tuple(row_match)
        terms.append((delta, perm))
        for r in range(dim):
            c = perm[r]
            work[r][c] -= delta
            if work[r][c] == 0:
                row_match[r] = -1
                col_match[c] = -1
        remaining -= delta
    if sum(w for w, _ in terms) != 1:
        raise RuntimeError("internal: decomposition weights do not sum to 1")
    if len(terms) > dim * dim - 2 * dim + 2 and dim > 1:
        raise RuntimeError("internal: decomposition exceeded the term bound")
    return BvnDecomposition(terms=terms)


# ---------------------------------------------------------------------------
# Decoding and the randomized allocation
# ---------------------------------------------------------------------------


def decode_allocation(inst: Instance, perm: Sequence[int], eating: EatingMatrix) -> Allocation:
    """Map a permutation of the eating matrix back to a full allocation:
    goods eaten by any copy of an agent belong to that agent; dummy columns
    are dropped (they carry zero value for everyone)."""
    owner = [-1] * inst.m
    for row, col in enumerate(perm):
        if col < inst.m:
            owner[col] = eating.row_agent(row)
    alloc = Allocation(owner, inst.n)
    if not alloc.is_complete:
        raise RuntimeError("internal: permutation did not cover every real good")
    return alloc


def randomized_allocation(inst: Instance) -> list[tuple[Fraction, Allocation]]:
    """Lottery over welfare-optimal EQ1 allocations whose expected value is
    exactly W/W_c for every agent.  A single deterministic allocation when
    W_c divides W; otherwise the decoded eating-matrix decomposition."""
    dn = is_doubly_normalised(inst)
    if dn is None:
        raise ValueError("instance is not doubly normalised")
    W, W_c = dn
    if W % W_c == 0:
        return [(Fraction(1), solve_flow(inst))]
    eat = eating_matrix(inst)
    decomp = bvn_decompose(eat.matrix)
    return [(w, decode_allocation(inst, perm, eat)) for w, perm in decomp.terms]
