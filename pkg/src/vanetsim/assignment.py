"""Bipartite assignment solvers shared by the tracker and the metrics.

The workhorse is a forward auction with epsilon scaling: bidders compete for
items by raising prices until every bidder holds its best net-value item.
With integer benefits scaled by (n+1) and a final epsilon of 1, the result
is exactly optimal.  A brute-force reference solver is included for small
instances and test oracles.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def max_weight_matching(benefit):
    """Maximum-total-benefit partial matching of rows (bidders) to columns (items).

    ``benefit`` is a nonnegative integer matrix.  Pairs with zero benefit are
    never reported; not every row or column needs a partner.  Returns a list
    of (row, col) pairs sorted by row.
    """
    b = np.asarray(benefit)
    if b.size == 0:
        return []
    if not np.issubdtype(b.dtype, np.integer):
        raise ValueError("benefits must be integers (scale and round first)")
    if (b < 0).any():
        raise ValueError("benefits must be nonnegative")

    # Rows/columns without any positive benefit cannot contribute.
    rows = np.flatnonzero(b.max(axis=1) > 0)
    cols = np.flatnonzero(b.max(axis=0) > 0)
    if rows.size == 0 or cols.size == 0:
        return []
    sub = b[np.ix_(rows, cols)]

    n = max(sub.shape)
    square = np.zeros((n, n), dtype=np.int64)
    square[: sub.shape[0], : sub.shape[1]] = sub
    owner = _auction_square(square * (n + 1))

    pairs = []
    for j, i in enumerate(owner):
        if i < sub.shape[0] and j < sub.shape[1] and sub[i, j] > 0:
            pairs.append((int(rows[i]), int(cols[j])))
    pairs.sort()
    return pairs


def _auction_square(b):
    """Forward auction for a square integer benefit matrix; returns owner per item.

    Optimal for the given integer benefits because the final round uses
    eps = 1 on benefits pre-scaled by (n+1).
    """
    n = b.shape[0]
    prices = np.zeros(n, dtype=np.float64)
    bf = b.astype(np.float64)
    eps = max(1.0, float(b.max()) / 4.0)
    owner = np.full(n, -1, dtype=np.int64)
    while True:
        owner[:] = -1
        assigned = np.full(n, -1, dtype=np.int64)
        queue = deque(range(n))
        while queue:
            i = queue.popleft()
            values = bf[i] - prices
            j = int(np.argmax(values))
            best = values[j]
            if n > 1:
                second = np.partition(values, -2)[-2]
            else:
                second = best
            prices[j] += best - second + eps
            prev = owner[j]
            if prev >= 0:
                assigned[prev] = -1
                queue.append(prev)
            owner[j] = i
            assigned[i] = j
        if eps <= 1.0:
            return owner
        eps = max(1.0, eps / 5.0)


def brute_force_max_weight(benefit, limit=9):
    """Exhaustive maximum-benefit matching for small instances (test oracle).

    Returns (best_total, pairs).  Zero-benefit pairs are dropped from the
    reported pairs but do not affect the total.
    """
    b = np.asarray(benefit, dtype=np.int64)
    n_r, n_c = b.shape if b.size else (0, 0)
    if n_r == 0 or n_c == 0:
        return 0, []
    if max(n_r, n_c) > limit:
        raise ValueError(f"brute force limited to {limit}x{limit}")
    n = max(n_r, n_c)
    square = np.zeros((n, n), dtype=np.int64)
    square[:n_r, :n_c] = b
    best_total = -1
    best_perm = None
    for perm in itertools.permutations(range(n)):
        total = sum(square[i, perm[i]] for i in range(n))
        if total > best_total:
            best_total = total
            best_perm = perm
    pairs = [
        (i, best_perm[i])
        for i in range(n)
        if i < n_r and best_perm[i] < n_c and b[i, best_perm[i]] > 0
    ]
    return int(best_total), sorted(pairs)


def min_cost_max_cardinality(cost, feasible, scale=1_000_000):
    """Gated min-cost matching: maximize match count, then minimize total cost.

    ``cost`` is a float matrix, ``feasible`` a boolean mask of admissible
    pairs.  Costs are integerized at ``scale`` and flipped into benefits so
    that any matching of higher cardinality dominates.  Among equal-cost
    optima, pairwise swaps canonicalize toward the lexicographically
    smallest (row, col) pair set.
    """
    cost = np.asarray(cost, dtype=float)
    feasible = np.asarray(feasible, dtype=bool)
    if cost.size == 0 or not feasible.any():
        return []
    c_int = np.round(cost * scale).astype(np.int64)
    c_int[~feasible] = 0
    c_max = int(c_int.max())
    n = max(cost.shape)
    big = np.int64(n) * c_max + 1
    benefit = np.where(feasible, big - c_int, 0).astype(np.int64)
    pairs = max_weight_matching(benefit)
    return _lex_canonicalize(pairs, c_int, feasible)


def _lex_canonicalize(pairs, cost, feasible):
    """Swap equal-cost pair combinations toward the lexicographic minimum."""
    pairs = sorted(pairs)
    changed = True
    while changed:
        changed = False
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                (i, j), (k, l) = pairs[a], pairs[b]
                if not (feasible[i, l] and feasible[k, j]):
                    continue
                if cost[i, j] + cost[k, l] != cost[i, l] + cost[k, j]:
                    continue
                swapped = sorted(pairs[:a] + [(i, l)] + pairs[a + 1 : b] + [(k, j)] + pairs[b + 1 :])
                if swapped < pairs:
                    pairs = swapped
                    changed = True
    return pairs
