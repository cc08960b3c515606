"""Hungarian method for rectangular linear assignment.

Shortest augmenting path formulation with row/column potentials, O(n^2 m)
for an n x m cost matrix with n <= m. Works in exact arithmetic when the
costs are Python ints.
"""

from __future__ import annotations

from typing import Sequence

INF = float("inf")


def _solve_rows_le_cols(cost: Sequence[Sequence[float]]) -> list[int]:
    n, m = len(cost), len(cost[0])
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = row (1-based) assigned to column j
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta, j1 = INF, 0
            row = cost[i0 - 1]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j], way[j] = cur, j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    assign = [-1] * n
    for j in range(1, m + 1):
        if match[j]:
            assign[match[j] - 1] = j - 1
    return assign


def linear_assignment(cost: Sequence[Sequence[float]]) -> list[tuple[int, int]]:
    """Minimum-cost matching covering min(rows, cols) pairs, as (row, col) tuples."""
    n = len(cost)
    if n == 0 or len(cost[0]) == 0:
        return []
    m = len(cost[0])
    if n <= m:
        return [(i, j) for i, j in enumerate(_solve_rows_le_cols(cost))]
    transposed = [[cost[i][j] for i in range(n)] for j in range(m)]
    return sorted((i, j) for j, i in enumerate(_solve_rows_le_cols(transposed)))


def max_weight_matching(weights: Sequence[Sequence[float]]) -> tuple[float, list[tuple[int, int]]]:
    """Maximum-weight partial matching for non-negative weights.

    Rows may stay unmatched (padded with zero-weight dummy columns); only
    pairs with positive weight are reported.
    """
    n = len(weights)
    if n == 0:
        return 0, []
    m = len(weights[0])
    cost = [[-w for w in row] + [0] * n for row in weights]
    pairs = [(i, j) for i, j in linear_assignment(cost) if j < m and weights[i][j] > 0]
    return sum(weights[i][j] for i, j in pairs), pairs
