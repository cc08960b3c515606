"""Ratcliff/Obershelp gestalt pattern matching.

Behaves like :class:`difflib.SequenceMatcher` with no junk heuristics: the
longest common substring is found (leftmost in ``a``, then leftmost in
``b`` on ties), and the search recurses on the unmatched pieces to its left
and right.
"""

from __future__ import annotations

from typing import Sequence


def longest_match(a: Sequence, b: Sequence, alo: int, ahi: int, blo: int, bhi: int) -> tuple[int, int, int]:
    best_i, best_j, best_k = alo, blo, 0
    prev = [0] * (bhi - blo + 1)
    for i in range(alo, ahi):
        cur = [0] * (bhi - blo + 1)
        ai = a[i]
        for j in range(blo, bhi):
            if ai == b[j]:
                k = prev[j - blo] + 1
                cur[j - blo + 1] = k
                if k > best_k:
                    best_i, best_j, best_k = i - k + 1, j - k + 1, k
        prev = cur
    return best_i, best_j, best_k


def matched_characters(a: Sequence, b: Sequence) -> int:
    total = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        if alo >= ahi or blo >= bhi:
            continue
        i, j, k = longest_match(a, b, alo, ahi, blo, bhi)
        if k == 0:
            continue
        total += k
        stack.append((alo, i, blo, j))
        stack.append((i + k, ahi, j + k, bhi))
    return total


def similarity_ratio(a: str, b: str) -> float:
    """Gestalt ratio ``2 M / (|a| + |b|)``; two empty strings score 1.0."""
    n = len(a) + len(b)
    if n == 0:
        return 1.0
    return 2.0 * matched_characters(a, b) / n
