"""Instance families: worst-case constructions, fixed fixtures, and seeded
random corpora."""

from __future__ import annotations

import random

from .model import BinaryAdditive, Instance, LinearMatroidGF2


def gen_lower_bound_instance(r: int, W: int) -> Instance:
    """Disjoint-groups family: rW goods in r groups of W; W + 1 agents value
    the first group, one agent each values the others.  Binary additive,
    normalised with constant W; any allocation leaves one first-type agent
    at zero value."""
    if r < 2 or W < 1:
        raise ValueError("family requires r >= 2 and W >= 1")
    m = r * W
    rows = []
    group1 = [1] * W + [0] * (m - W)
    rows.extend([group1] * (W + 1))
    for t in range(1, r):
        row = [0] * m
        for g in range(t * W, (t + 1) * W):
            row[g] = 1
        rows.append(row)
    return Instance([BinaryAdditive(row) for row in rows])


def gen_submodular_lb_instance(k: int) -> Instance:
    """Two-type matroid family: k(k+1) goods in k+1 groups of k.

    Type-1 agents (k of them) see the first group as the standard basis of
    GF(2)^k and everything else as zero vectors; type-2 agents (k of them)
    see every group as the standard basis.  Normalised with W = k."""
    if k < 1:
        raise ValueError("family parameter k must be >= 1")
    m = k * (k + 1)
    basis = [[1 if j == i else 0 for j in range(k)] for i in range(k)]
    zero = [0] * k
    type1_cols = [basis[g] if g < k else zero for g in range(m)]
    type2_cols = [basis[g % k] for g in range(m)]
    t1 = LinearMatroidGF2(k, type1_cols)
    t2 = LinearMatroidGF2(k, type2_cols)
    return Instance([t1] * k + [t2] * k)


def gen_doubly_normalised(n: int, m: int, W: int, W_c: int, seed: int) -> Instance:
    """Biregular binary additive instance: every row sums to W and every
    column to W_c.  Requires nW = mW_c.  Built from a canonical round-robin
    biregular matrix, then shuffled by margin-preserving 2x2 swaps."""
    if n < 1 or m < 1 or W < 1 or W_c < 1:
        raise ValueError("all parameters must be positive")
    if W > m or W_c > n:
        raise ValueError("degrees cannot exceed the opposite side")
    if n * W != m * W_c:
        raise ValueError(f"infeasible margins: n*W = {n * W} != m*W_c = {m * W_c}")
    matrix = [[0] * m for _ in range(n)]
    for i in range(n):
        for t in range(W):
            matrix[i][(i * W + t) % m] = 1
    rng = random.Random(seed)
    for _ in range(10 * n * m):
        i, j = rng.randrange(n), rng.randrange(n)
        g, h = rng.randrange(m), rng.randrange(m)
        if i == j or g == h:
            continue
        if matrix[i][g] and matrix[j][h] and not matrix[i][h] and not matrix[j][g]:
            matrix[i][g] = matrix[j][h] = 0
            matrix[i][h] = matrix[j][g] = 1
    return Instance([BinaryAdditive(row) for row in matrix])


def example1_instance() -> Instance:
    """Fixed doubly normalised fixture: 4 agents, 6 goods, W = 3, W_c = 2.

    Agent 1 likes goods {1,2,3}, agent 2 likes {4,5,6}, agent 3 likes
    {2,3,4}, agent 4 likes {1,5,6} (1-based)."""
    rows = [
        [1, 1, 1, 0, 0, 0],
        [0, 0, 0, 1, 1, 1],
        [0, 1, 1, 1, 0, 0],
        [1, 0, 0, 0, 1, 1],
    ]
    return Instance([BinaryAdditive(row) for row in rows])


def remark_3x4_instance() -> Instance:
    """Fixture showing double normalisation is not necessary for a price of
    equity of 1: 3 agents, 4 goods; agent 1 values {1,2}, agents 2 and 3
    both value {3,4}.  Not column-normalised."""
    rows = [
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
    ]
    return Instance([BinaryAdditive(row) for row in rows])


def unnormalised_2agent_instance(k: int) -> Instance:
    """Two agents, k goods: agent 1 values only the first good, agent 2
    values all k.  Not normalised; its utilitarian price of equity is k/3."""
    if k < 3:
        raise ValueError("needs k >= 3 goods")
    return Instance([
        BinaryAdditive([1] + [0] * (k - 1)),
        BinaryAdditive([1] * k),
    ])


# ---------------------------------------------------------------------------
# Seeded random corpora (for verification gates and tests)
# ---------------------------------------------------------------------------


def random_binary_additive(
    rng: random.Random,
    n: int,
    m: int,
    *,
    W: int | None = None,
    every_good_valued: bool = False,
) -> Instance:
    """Random binary additive instance.  With ``W`` given, every row has
    exactly W ones (normalised); with ``every_good_valued``, no column is
    all-zero (requires nW >= m when normalised)."""
    if W is not None:
        if not 0 <= W <= m:
            raise ValueError("W must lie in [0, m]")
        if every_good_valued and n * W < m:
            raise ValueError("cannot value every good: n*W < m")
        matrix = [_row_with_weight(rng, m, W) for _ in range(n)]
        guard = 0
        while every_good_valued:
            empty = [g for g in range(m) if not any(row[g] for row in matrix)]
            if not empty:
                break
            guard += 1
            if guard > 10_000:
                raise RuntimeError("could not repair column coverage")
            g = empty[0]
            i = rng.randrange(n)
            rich = [h for h in range(m) if matrix[i][h] and sum(r[h] for r in matrix) >= 2]
            if not rich:
                continue
            h = rng.choice(rich)
            matrix[i][h], matrix[i][g] = 0, 1
    else:
        matrix = [[rng.randint(0, 1) for _ in range(m)] for _ in range(n)]
        if every_good_valued:
            for g in range(m):
                if not any(row[g] for row in matrix):
                    matrix[rng.randrange(n)][g] = 1
    return Instance([BinaryAdditive(row) for row in matrix])


def _row_with_weight(rng: random.Random, m: int, W: int) -> list[int]:
    row = [0] * m
    for g in rng.sample(range(m), W):
        row[g] = 1
    return row


def random_matroid_gf2(
    rng: random.Random,
    n: int,
    m: int,
    *,
    k: int | None = None,
    W: int | None = None,
    identical: bool = False,
) -> Instance:
    """Random GF(2) linear-matroid instance.

    With ``W`` given, each agent's matrix has W rows and contains a planted
    identity among its columns, so the grand bundle has rank exactly W
    (normalised).  With ``identical``, all agents share one valuation."""

    def one(seed_rng: random.Random) -> LinearMatroidGF2:
        if W is not None:
            if not 1 <= W <= m:
                raise ValueError("W must lie in [1, m]")
            rows = W
            cols = [[seed_rng.randint(0, 1) for _ in range(rows)] for _ in range(m)]
            for j, g in enumerate(seed_rng.sample(range(m), W)):
                cols[g] = [1 if t == j else 0 for t in range(rows)]
        else:
            rows = k if k is not None else seed_rng.randint(1, max(1, min(4, m)))
            cols = [[seed_rng.randint(0, 1) for _ in range(rows)] for _ in range(m)]
        return LinearMatroidGF2(rows, cols)

    if identical:
        v = one(rng)
        return Instance([v] * n)
    return Instance([one(rng) for _ in range(n)])


def biregular_parameter_choices(n: int, m: int) -> list[tuple[int, int]]:
    """Feasible (W, W_c) pairs for an n x m biregular 0/1 matrix."""
    out = []
    for W_c in range(1, n + 1):
        if (m * W_c) % n:
            continue
        W = m * W_c // n
        if 1 <= W <= m:
            out.append((W, W_c))
    return out
