"""Diarization error rate with optimal one-to-one speaker mapping.

All time bookkeeping is in integer milliseconds, so component sums are exact
and the error rate is a single division at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..errors import EmptyReference, UnpairedRecording
from .annotation import Annotation, to_ms
from .assignment import max_weight_matching

# (duration_ms, ref speakers, hyp speakers) for each scored elementary interval
Interval = tuple[int, frozenset, frozenset]


@dataclass(frozen=True)
class DerReport:
    fa_ms: int
    miss_ms: int
    conf_ms: int
    total_ms: int
    mapping: Mapping[str, object] = field(default_factory=dict)

    @property
    def fa_s(self) -> float:
        return self.fa_ms / 1000.0

    @property
    def miss_s(self) -> float:
        return self.miss_ms / 1000.0

    @property
    def conf_s(self) -> float:
        return self.conf_ms / 1000.0

    @property
    def total_s(self) -> float:
        return self.total_ms / 1000.0

    @property
    def error_ms(self) -> int:
        return self.fa_ms + self.miss_ms + self.conf_ms

    @property
    def der(self) -> float:
        if self.total_ms == 0:
            raise EmptyReference("no scored reference speech")
        return self.error_ms / self.total_ms

    def __add__(self, other: "DerReport") -> "DerReport":
        return DerReport(
            self.fa_ms + other.fa_ms,
            self.miss_ms + other.miss_ms,
            self.conf_ms + other.conf_ms,
            self.total_ms + other.total_ms,
            {**self.mapping, **other.mapping},
        )

    def to_dict(self) -> dict:
        return {
            "der": self.der,
            "false_alarm_s": self.fa_s,
            "missed_s": self.miss_s,
            "confusion_s": self.conf_s,
            "total_s": self.total_s,
            "mapping": dict(self.mapping),
        }


def scored_intervals(ref: Annotation, hyp: Annotation, collar_s: float = 0.0) -> list[Interval]:
    """Split time into intervals of constant speaker activity, minus collars."""
    collar = to_ms(collar_s)
    events: dict[int, list[tuple[int, int, str]]] = {}

    def add(t: int, kind: int, delta: int, spk: str = "") -> None:
        events.setdefault(t, []).append((kind, delta, spk))

    for s, e, spk in ref.spans_ms():
        add(s, 0, +1, spk)
        add(e, 0, -1, spk)
        if collar:
            for b in (s, e):
                add(max(0, b - collar), 2, +1)
                add(b + collar, 2, -1)
    for s, e, spk in hyp.spans_ms():
        add(s, 1, +1, spk)
        add(e, 1, -1, spk)

    active: tuple[dict[str, int], dict[str, int]] = ({}, {})
    in_collar = 0
    out: list[Interval] = []
    prev_t = None
    for t in sorted(events):
        if prev_t is not None and t > prev_t and not in_collar:
            r = frozenset(k for k, c in active[0].items() if c > 0)
            h = frozenset(k for k, c in active[1].items() if c > 0)
            if r or h:
                out.append((t - prev_t, r, h))
        for kind, delta, spk in events[t]:
            if kind == 2:
                in_collar += delta
            else:
                side = active[kind]
                side[spk] = side.get(spk, 0) + delta
        prev_t = t
    return out


def overlap_matrix(intervals: Iterable[Interval], hyp_speakers: Sequence[str], ref_speakers: Sequence[str]) -> list[list[int]]:
    hi = {h: i for i, h in enumerate(hyp_speakers)}
    ri = {r: j for j, r in enumerate(ref_speakers)}
    w = [[0] * len(ref_speakers) for _ in hyp_speakers]
    for d, rs, hs in intervals:
        for h in hs:
            for r in rs:
                w[hi[h]][ri[r]] += d
    return w


def _best_total(w: list[list[int]], rows: list[int], cols: list[int]) -> int:
    if not rows or not cols:
        return 0
    total, _ = max_weight_matching([[w[i][j] for j in cols] for i in rows])
    return total


def lexicographic_mapping(w: list[list[int]], hyp: Sequence[str], ref: Sequence[str]) -> dict[str, str]:
    """Maximum-overlap one-to-one mapping; ties go to the lexicographically smallest.

    Hyp speakers are visited in sorted order and each is pinned to the
    smallest reference label that still allows the global optimum.
    """
    rows = sorted(range(len(hyp)), key=lambda i: hyp[i])
    col_order = sorted(range(len(ref)), key=lambda j: ref[j])
    best = _best_total(w, rows, col_order)
    free_rows, free_cols = list(rows), list(col_order)
    acc = 0
    mapping: dict[str, str] = {}
    for i in rows:
        free_rows.remove(i)
        for j in free_cols:
            if w[i][j] <= 0:
                continue
            rest = [c for c in free_cols if c != j]
            if acc + w[i][j] + _best_total(w, free_rows, rest) == best:
                mapping[hyp[i]] = ref[j]
                acc += w[i][j]
                free_cols = rest
                break
    return mapping


def optimal_mapping(ref: Annotation, hyp: Annotation, collar_s: float = 0.0) -> dict[str, str]:
    """Hyp-to-ref speaker map maximizing total co-active time (Hungarian method)."""
    ref, hyp = ref.canonicalize(), hyp.canonicalize()
    intervals = scored_intervals(ref, hyp, collar_s)
    return _mapping_from_intervals(intervals, hyp.speakers, ref.speakers)


def _mapping_from_intervals(intervals: list[Interval], hyp_spk: list[str], ref_spk: list[str]) -> dict[str, str]:
    w = overlap_matrix(intervals, hyp_spk, ref_spk)
    return lexicographic_mapping(w, hyp_spk, ref_spk)


def score_intervals(intervals: Iterable[Interval], mapping: Mapping[str, str]) -> tuple[int, int, int, int]:
    fa = miss = conf = total = 0
    for d, rs, hs in intervals:
        nr, nh = len(rs), len(hs)
        correct = sum(1 for h in hs if mapping.get(h) in rs)
        miss += d * max(0, nr - nh)
        fa += d * max(0, nh - nr)
        conf += d * (min(nr, nh) - correct)
        total += d * nr
    return fa, miss, conf, total


def der_components(ref: Annotation, hyp: Annotation, collar_s: float = 0.0) -> DerReport:
    """Like :func:`der` but never raises on an empty reference."""
    ref, hyp = ref.canonicalize(), hyp.canonicalize()
    intervals = scored_intervals(ref, hyp, collar_s)
    mapping = _mapping_from_intervals(intervals, hyp.speakers, ref.speakers)
    fa, miss, conf, total = score_intervals(intervals, mapping)
    return DerReport(fa, miss, conf, total, mapping)


def der(ref: Annotation, hyp: Annotation, collar_s: float = 0.0) -> DerReport:
    report = der_components(ref, hyp, collar_s)
    if report.total_ms == 0:
        raise EmptyReference(f"{ref.uri}: no scored reference speech")
    return report


def pair_by_uri(refs: Iterable[Annotation], hyps: Iterable[Annotation], allow_missing_hyp: bool = False) -> list[tuple[Annotation, Annotation]]:
    ref_map = {a.uri: a for a in refs}
    hyp_map = {a.uri: a for a in hyps}
    extra = sorted(set(hyp_map) - set(ref_map))
    missing = sorted(set(ref_map) - set(hyp_map))
    if extra:
        raise UnpairedRecording(f"hypothesis recordings without reference: {extra}")
    if missing and not allow_missing_hyp:
        raise UnpairedRecording(f"reference recordings without hypothesis: {missing}")
    return [(ref_map[u], hyp_map.get(u, Annotation(u))) for u in sorted(ref_map)]


def corpus_der(
    refs: Iterable[Annotation],
    hyps: Iterable[Annotation],
    collar_s: float = 0.0,
    allow_missing_hyp: bool = False,
) -> DerReport:
    """Pooled DER: components summed over recordings before dividing.

    The returned mapping is keyed by uri.
    """
    fa = miss = conf = total = 0
    mappings: dict[str, dict[str, str]] = {}
    for ref, hyp in pair_by_uri(refs, hyps, allow_missing_hyp):
        r = der_components(ref, hyp, collar_s)
        fa, miss, conf, total = fa + r.fa_ms, miss + r.miss_ms, conf + r.conf_ms, total + r.total_ms
        mappings[ref.uri] = dict(r.mapping)
    report = DerReport(fa, miss, conf, total, mappings)
    if total == 0:
        raise EmptyReference("no scored reference speech in any recording")
    return report
