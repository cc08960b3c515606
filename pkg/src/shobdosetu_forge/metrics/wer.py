"""Word error rate with an explicit minimum-edit alignment."""

from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import EmptyCorpus, EmptyReference

# characters stripped by ``tokenize(..., strip_punct=True)``; the danda
# pair is the Bengali full stop
_PUNCT = set(string.punctuation) | {"।", "॥", "’", "‘", "“", "”"}


def tokenize(text: str, strip_punct: bool = False) -> list[str]:
    """NFC-normalize and split on whitespace runs."""
    text = unicodedata.normalize("NFC", text)
    if strip_punct:
        text = "".join(" " if ch in _PUNCT else ch for ch in text)
    return text.split()


@dataclass(frozen=True)
class TokenAlignment:
    S: int
    D: int
    I: int  # noqa: E741
    C: int
    N: int
    # (op, ref_token, hyp_token) with op in {"C", "S", "D", "I"}
    ops: tuple[tuple[str, str | None, str | None], ...] = field(default=(), repr=False)

    @property
    def errors(self) -> int:
        return self.S + self.D + self.I


def align_tokens(ref: Sequence[str], hyp: Sequence[str]) -> TokenAlignment:
    """Unit-cost Levenshtein alignment of two token lists.

    Among equal-cost alignments the backtrace prefers match, then
    substitution, then deletion, then insertion. The choice only affects
    the S/D/I breakdown, never their sum.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (r != hyp[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    ops = []
    i, j = n, m
    while i or j:
        here = dist[i][j]
        if i and j and ref[i - 1] == hyp[j - 1] and here == dist[i - 1][j - 1]:
            ops.append(("C", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i and j and here == dist[i - 1][j - 1] + 1:
            ops.append(("S", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i and here == dist[i - 1][j] + 1:
            ops.append(("D", ref[i - 1], None))
            i -= 1
        else:
            ops.append(("I", None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    counts = {k: 0 for k in "CSDI"}
    for op, _, _ in ops:
        counts[op] += 1
    return TokenAlignment(counts["S"], counts["D"], counts["I"], counts["C"], n, tuple(ops))


@dataclass(frozen=True)
class WerReport:
    alignment: TokenAlignment
    wer_percent: float
    # unweighted mean of per-item WERs; only set by corpus_wer
    mean_item_wer_percent: float | None = None
    n_items: int = 1

    def to_dict(self) -> dict:
        a = self.alignment
        return {
            "wer": self.wer_percent,
            "substitutions": a.S,
            "deletions": a.D,
            "insertions": a.I,
            "correct": a.C,
            "reference_words": a.N,
            "items": self.n_items,
            "mean_item_wer": self.mean_item_wer_percent,
        }


def _percent(errors: int, n: int) -> float:
    return 100.0 * errors / n


def wer(ref: str, hyp: str, strip_punct: bool = False) -> WerReport:
    """``100 * (S + D + I) / N``. Two empty strings score 0."""
    r, h = tokenize(ref, strip_punct), tokenize(hyp, strip_punct)
    a = align_tokens(r, h)
    if a.N == 0:
        if h:
            raise EmptyReference("reference has no words but hypothesis does")
        return WerReport(a, 0.0)
    return WerReport(a, _percent(a.errors, a.N))


def corpus_wer(pairs: Iterable[tuple[str, str]], strip_punct: bool = False) -> WerReport:
    """Pooled WER: total errors over total reference words."""
    S = D = I = C = N = 0  # noqa: E741
    per_item = []
    count = 0
    for ref, hyp in pairs:
        a = align_tokens(tokenize(ref, strip_punct), tokenize(hyp, strip_punct))
        S, D, I, C, N = S + a.S, D + a.D, I + a.I, C + a.C, N + a.N  # noqa: E741
        count += 1
        if a.N:
            per_item.append(_percent(a.errors, a.N))
    if N == 0:
        raise EmptyCorpus("no reference words in any pair")
    total = TokenAlignment(S, D, I, C, N)
    return WerReport(total, _percent(S + D + I, N), sum(per_item) / len(per_item), count)
